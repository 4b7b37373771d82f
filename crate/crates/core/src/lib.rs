//! Decision procedure for disjunctive linear arithmetic over the rationals.
//!
//! A formula is normalized to a negation-free Boolean combination of linear
//! inequalities, every distinct inequality becomes a propositional
//! predicate, and Fourier-Motzkin elimination is run once over all of them
//! while recording each derivation `e_i ∧ e_j → e_k` as a Horn clause. The
//! resulting propositional instance is equisatisfiable with the input and
//! is decided by a small DPLL solver. Conjunctions matrices restrict
//! elimination to pairs of predicates that can share a DNF clause.
//!
//! Two reference procedures, case splitting over DNF cubes and a lazy
//! SAT/FM loop, serve as oracles.

pub mod baselines;
pub mod bench;
pub mod bfm;
pub mod constraint;
pub mod formula;
pub mod generators;
pub mod matrix;
pub mod normalize;
pub mod parser;
pub mod rational;
pub mod sat;
pub mod solve;

pub use baselines::{case_split_solve, extract_witness, lazy_solve, OracleError, OracleOptions, OracleResult};
pub use bfm::{run_bfm, BfmCounters, BfmError, BfmOptions, BfmResult, Implication};
pub use constraint::{resolve, CanonResult, FmError, LinearConstraint, Point, VarId};
pub use formula::{Atom, Formula, FormulaAst, RelOp};
pub use matrix::{build_matrix, ConjunctionsMatrix, MatrixMode};
pub use normalize::{encode, normalize, BooleanSkeleton, InstId, PredId, PredicateTable};
pub use parser::{parse, ParseError};
pub use rational::Rational;
pub use sat::{build_cnf, export_dimacs, solve_cnf, CnfFormula, SatResult, VarRole, Verdict};
pub use generators::{gen_2cnf, gen_random_structure, generate, Family, GenConfig, SplitMix64};
pub use solve::{compile, solve_formula, solve_with_witness, Engine, SolveError, SolveOptions, SolveReport};
