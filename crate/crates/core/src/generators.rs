//! Seeded random formula families.
//!
//! # Random stream
//!
//! All draws come from SplitMix64 so that any implementation can reproduce
//! a formula from its seed:
//!
//! ```text
//! state  = state + 0x9E3779B97F4A7C15            (wrapping)
//! z      = state
//! z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (wrapping)
//! z      = (z ^ (z >> 27)) * 0x94D049BB133111EB  (wrapping)
//! output = z ^ (z >> 31)
//! ```
//!
//! An integer in `[lo, hi]` is `lo + ((output * (hi - lo + 1)) >> 64)`
//! computed in 128 bits; a coin flip is the top bit of one output.
//!
//! # Atoms
//!
//! An atom is `a_1 x1 + ... + a_n xn <= b`. The coefficients `a_1..a_n` are
//! drawn in order, then `b`, all uniform in `[-r, r]`. An atom whose
//! coefficients are all zero is drawn again.
//!
//! # Families
//!
//! * `TwoCnf`: `m` clauses, each the disjunction of two atoms.
//! * `RandomStructure`: `m` groups `(p1 ◦ p2)`, where each group draws its
//!   two atoms and then a coin for `◦` (1 = and). Groups are folded left to
//!   right, `((g1 ◦ g2) ◦ g3) ...`, drawing one coin for each fold just
//!   before the group it adds is generated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constraint::VarId;
use crate::formula::{Atom, Formula, FormulaAst, RelOp};
use crate::rational::int;

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[lo, hi]`.
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        assert!(lo <= hi);
        let span = (hi as i128 - lo as i128 + 1) as u128;
        let offset = (self.next_u64() as u128 * span) >> 64;
        (lo as i128 + offset as i128) as i64
    }

    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    TwoCnf,
    RandomStructure,
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2cnf" => Ok(Family::TwoCnf),
            "rand" => Ok(Family::RandomStructure),
            other => Err(format!("unknown family '{other}' (expected 2cnf or rand)")),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::TwoCnf => "2cnf",
            Family::RandomStructure => "rand",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_vars: usize,
    pub n_clauses: usize,
    pub seed: u64,
    pub coeff_range: i64,
    pub family: Family,
}

impl GenConfig {
    pub fn new(family: Family, n_vars: usize, n_clauses: usize, seed: u64) -> Self {
        GenConfig { n_vars, n_clauses, seed, coeff_range: 10, family }
    }

    fn check(&self) {
        assert!(self.n_vars >= 1, "n_vars must be at least 1");
        assert!(self.n_clauses >= 1, "n_clauses must be at least 1");
        assert!(self.coeff_range >= 1, "coeff_range must be at least 1");
    }
}

fn random_atom(rng: &mut SplitMix64, n: usize, r: i64) -> FormulaAst {
    loop {
        let coeffs: Vec<i64> = (0..n).map(|_| rng.range(-r, r)).collect();
        let bound = rng.range(-r, r);
        if coeffs.iter().all(|a| *a == 0) {
            continue;
        }
        let lhs = coeffs.iter().enumerate().map(|(j, a)| (VarId(j as u32), int(*a)));
        return FormulaAst::Atom(Atom::new(lhs, RelOp::Le, int(bound)));
    }
}

fn finish(cfg: &GenConfig, root: FormulaAst) -> Formula {
    let vars = (1..=cfg.n_vars).map(|i| format!("x{i}")).collect();
    Formula { vars, root }.renumbered()
}

fn join(and: bool, a: FormulaAst, b: FormulaAst) -> FormulaAst {
    if and {
        FormulaAst::And(vec![a, b])
    } else {
        FormulaAst::Or(vec![a, b])
    }
}

/// A conjunction of `n_clauses` two-atom disjunctions.
pub fn gen_2cnf(cfg: &GenConfig) -> Formula {
    cfg.check();
    let mut rng = SplitMix64::new(cfg.seed);
    let clauses = (0..cfg.n_clauses)
        .map(|_| {
            let a = random_atom(&mut rng, cfg.n_vars, cfg.coeff_range);
            let b = random_atom(&mut rng, cfg.n_vars, cfg.coeff_range);
            FormulaAst::Or(vec![a, b])
        })
        .collect();
    finish(cfg, FormulaAst::And(clauses))
}

/// `n_clauses` binary groups under random connectives, folded left to right.
///
/// The tree is kept binary as generated; parsing its rendering flattens
/// runs of the same connective.
pub fn gen_random_structure(cfg: &GenConfig) -> Formula {
    cfg.check();
    let mut rng = SplitMix64::new(cfg.seed);
    let group = |rng: &mut SplitMix64| {
        let a = random_atom(rng, cfg.n_vars, cfg.coeff_range);
        let b = random_atom(rng, cfg.n_vars, cfg.coeff_range);
        join(rng.coin(), a, b)
    };
    let mut acc = group(&mut rng);
    for _ in 1..cfg.n_clauses {
        let and = rng.coin();
        let g = group(&mut rng);
        acc = join(and, acc, g);
    }
    finish(cfg, acc)
}

pub fn generate(cfg: &GenConfig) -> Formula {
    match cfg.family {
        Family::TwoCnf => gen_2cnf(cfg),
        Family::RandomStructure => gen_random_structure(cfg),
    }
}
