//! End-to-end solving with any of the three engines, producing a
//! serializable report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{case_split_solve, decide_conjunction, lazy_solve, OracleError, OracleOptions};
use crate::bfm::{run_bfm, BfmError, BfmOptions, BfmResult, DEFAULT_RESOLVENT_CAP};
use crate::constraint::{Point, VarId};
use crate::formula::Formula;
use crate::matrix::MatrixMode;
use crate::normalize::{encode, normalize, BooleanSkeleton, PredId, PredicateTable};
use crate::rational::{format_rational, Rational};
use crate::sat::{build_cnf, pred_var, solve_cnf, CnfFormula, SatResult, Verdict};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Bfm,
    Split,
    Lazy,
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bfm" => Ok(Engine::Bfm),
            "split" => Ok(Engine::Split),
            "lazy" => Ok(Engine::Lazy),
            other => Err(format!("unknown engine '{other}' (expected bfm, split or lazy)")),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Bfm => "bfm",
            Engine::Split => "split",
            Engine::Lazy => "lazy",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub engine: Engine,
    /// `None` disables the conjunctions matrix.
    pub matrix: Option<MatrixMode>,
    /// Variable names to eliminate first.
    pub order: Option<Vec<String>>,
    pub cap: usize,
    /// Branch only on original predicates.
    pub restrict: bool,
    /// Echoed in the report when the formula came from a generator.
    pub seed: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            engine: Engine::Bfm,
            matrix: Some(MatrixMode::Merged),
            order: None,
            cap: DEFAULT_RESOLVENT_CAP,
            restrict: true,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Bfm(#[from] BfmError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("unknown variable '{0}' in elimination order")]
    UnknownVariable(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl SolveError {
    /// Resource limits, as opposed to bad input or internal faults.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            SolveError::Bfm(BfmError::BlowUp { .. })
                | SolveError::Oracle(
                    OracleError::BlowUp { .. }
                        | OracleError::CubeCap { .. }
                        | OracleError::IterationCap { .. }
                )
        )
    }
}

/// Counters of one solve. Engine-specific entries are `null` for the
/// other engines.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Distinct linear predicates of the encoded formula.
    pub predicates: usize,
    /// Leaf occurrences in the skeleton.
    pub instances: usize,
    pub variables: usize,
    /// Proper resolvents of the Boolean elimination; contradictions are
    /// counted separately.
    pub bfm: Option<usize>,
    /// Proper resolvents summed over DNF cubes.
    pub split: Option<usize>,
    /// Proper resolvents summed over lazy-loop iterations.
    pub comb: Option<usize>,
    pub contradictions: Option<usize>,
    pub tautologies: Option<usize>,
    pub derived_predicates: Option<usize>,
    pub pairs_pruned: Option<usize>,
    pub implications: Option<usize>,
    pub cnf_vars: Option<usize>,
    pub clauses: Option<usize>,
    pub sat_decisions: Option<u64>,
    pub sat_propagations: Option<u64>,
    /// DNF cubes for case splitting, abstraction models for the lazy loop.
    pub cubes_examined: Option<usize>,
}

/// Wall-clock seconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Phases {
    pub normalize: f64,
    pub matrix: f64,
    pub elimination: f64,
    pub sat: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfigEcho {
    /// `merged`, `per-instance` or `off`.
    pub matrix: String,
    pub order: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub cap: usize,
    pub restrict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub verdict: Option<Verdict>,
    pub engine: Engine,
    pub counters: Counters,
    pub phases: Phases,
    /// Variable name to rational value, when SAT.
    pub witness: Option<BTreeMap<String, String>>,
    pub config: ConfigEcho,
    pub error: Option<String>,
    /// Whether `error` is a resource limit.
    #[serde(skip)]
    pub cap_hit: bool,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// JSON with the `phases` timing object removed.
    pub fn to_json_without_timing(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value.as_object_mut().expect("report is an object").remove("phases");
        serde_json::to_string(&value).expect("report serializes")
    }
}

/// Everything produced by the Boolean elimination route.
#[derive(Clone, Debug)]
pub struct Compiled {
    /// Encoding of the normalized input.
    pub table: PredicateTable,
    pub skeleton: BooleanSkeleton,
    pub bfm: BfmResult,
    pub cnf: CnfFormula,
    pub normalize_time: Duration,
}

fn resolve_order(formula: &Formula, order: &Option<Vec<String>>) -> Result<Option<Vec<VarId>>, SolveError> {
    order
        .as_ref()
        .map(|names| {
            names
                .iter()
                .map(|n| formula.var_id(n).ok_or_else(|| SolveError::UnknownVariable(n.clone())))
                .collect()
        })
        .transpose()
}

/// Normalizes, encodes and eliminates, yielding the propositional instance.
pub fn compile(formula: &Formula, opts: &SolveOptions) -> Result<Compiled, SolveError> {
    let order = resolve_order(formula, &opts.order)?;
    let started = Instant::now();
    let (table, skeleton) = encode(&normalize(formula));
    let normalize_time = started.elapsed();
    let bfm_opts = BfmOptions { matrix: opts.matrix, order, cap: opts.cap };
    let bfm = run_bfm(&table, &skeleton, &bfm_opts)?;
    let cnf = build_cnf(&bfm.skeleton, &bfm.implications, &bfm.table);
    if bfm.implications.len() != bfm.counters.resolvents + bfm.counters.contradictions {
        return Err(SolveError::Internal("implication count disagrees with counters".into()));
    }
    Ok(Compiled { table, skeleton, bfm, cnf, normalize_time })
}

/// A DNF cube of `skeleton` made only of predicates true in `model`.
pub fn satisfied_cube(skeleton: &BooleanSkeleton, holds: &dyn Fn(PredId) -> bool) -> Option<Vec<PredId>> {
    fn walk(node: &BooleanSkeleton, holds: &dyn Fn(PredId) -> bool, acc: &mut Vec<PredId>) -> bool {
        match node {
            BooleanSkeleton::Leaf { pred, .. } => {
                acc.push(*pred);
                holds(*pred)
            }
            BooleanSkeleton::And(cs) => cs.iter().all(|c| walk(c, holds, acc)),
            BooleanSkeleton::Or(cs) => cs.iter().any(|c| {
                let mark = acc.len();
                let ok = walk(c, holds, acc);
                if !ok {
                    acc.truncate(mark);
                }
                ok
            }),
            BooleanSkeleton::Const(b) => *b,
        }
    }
    let mut acc = Vec::new();
    walk(skeleton, holds, &mut acc).then_some(acc)
}

/// Rational point for a SAT model of the compiled instance.
pub fn bfm_witness(compiled: &Compiled, sat: &SatResult) -> Result<Point, SolveError> {
    let model = sat.model.as_ref().ok_or_else(|| SolveError::Internal("SAT without a model".into()))?;
    let holds = |p: PredId| model[pred_var(p) as usize - 1];
    let cube = satisfied_cube(&compiled.bfm.skeleton, &holds)
        .ok_or_else(|| SolveError::Internal("model does not satisfy the skeleton".into()))?;
    let (_, witness) = decide_conjunction(&cube, &compiled.bfm.table, usize::MAX)?;
    witness.ok_or_else(|| SolveError::Internal("true predicates of the model are inconsistent".into()))
}

fn complete_point(formula: &Formula, mut point: Point) -> Point {
    for i in 0..formula.num_vars() {
        point.entry(VarId(i as u32)).or_insert_with(|| Rational::from_integer(0.into()));
    }
    point
}

fn check_witness(formula: &Formula, point: &Point) -> Result<(), SolveError> {
    match formula.evaluate(point) {
        Ok(true) => Ok(()),
        Ok(false) => Err(SolveError::Internal("witness falsifies the formula".into())),
        Err(e) => Err(SolveError::Internal(e.to_string())),
    }
}

/// Verdict with a validated witness, plus the report.
pub struct Outcome {
    pub report: SolveReport,
    pub witness: Option<Point>,
    /// The propositional instance, for the Boolean elimination engine.
    pub compiled: Option<Compiled>,
}

pub fn solve_formula(formula: &Formula, opts: &SolveOptions) -> SolveReport {
    solve_with_witness(formula, opts).report
}

pub fn solve_with_witness(formula: &Formula, opts: &SolveOptions) -> Outcome {
    let started = Instant::now();
    let mut report = SolveReport {
        verdict: None,
        engine: opts.engine,
        counters: Counters { variables: formula.num_vars(), ..Default::default() },
        phases: Phases::default(),
        witness: None,
        config: ConfigEcho {
            matrix: opts.matrix.map_or("off".to_string(), |m| m.to_string()),
            order: opts.order.clone(),
            seed: opts.seed,
            cap: opts.cap,
            restrict: opts.restrict,
        },
        error: None,
        cap_hit: false,
    };
    let mut compiled = None;
    let result = run_engine(formula, opts, &mut report, &mut compiled);
    report.phases.total = started.elapsed().as_secs_f64();
    let witness = match result {
        Ok((verdict, witness)) => {
            report.verdict = Some(verdict);
            witness.map(|w| complete_point(formula, w))
        }
        Err(e) => {
            report.cap_hit = e.is_cap();
            report.error = Some(e.to_string());
            None
        }
    };
    if let Some(w) = &witness {
        if let Err(e) = check_witness(formula, w) {
            report.verdict = None;
            report.error = Some(e.to_string());
            return Outcome { report, witness: None, compiled };
        }
        report.witness = Some(
            w.iter().map(|(v, q)| (formula.vars[v.index()].clone(), format_rational(q))).collect(),
        );
    }
    Outcome { report, witness, compiled }
}

fn run_engine(
    formula: &Formula,
    opts: &SolveOptions,
    report: &mut SolveReport,
    keep: &mut Option<Compiled>,
) -> Result<(Verdict, Option<Point>), SolveError> {
    match opts.engine {
        Engine::Bfm => {
            let compiled = compile(formula, opts)?;
            let c = &mut report.counters;
            c.predicates = compiled.table.num_original();
            c.instances = compiled.table.num_instances();
            let k = &compiled.bfm.counters;
            c.bfm = Some(k.resolvents);
            c.contradictions = Some(k.contradictions);
            c.tautologies = Some(k.tautologies);
            c.derived_predicates = Some(k.derived_predicates);
            c.pairs_pruned = Some(k.pairs_pruned);
            c.implications = Some(compiled.bfm.implications.len());
            c.cnf_vars = Some(compiled.cnf.num_vars());
            c.clauses = Some(compiled.cnf.clauses().len());
            report.phases.normalize = compiled.normalize_time.as_secs_f64();
            report.phases.matrix = compiled.bfm.matrix_time.as_secs_f64();
            report.phases.elimination = compiled.bfm.elimination_time.as_secs_f64();
            let started = Instant::now();
            let sat = solve_cnf(&compiled.cnf, opts.restrict);
            report.phases.sat = started.elapsed().as_secs_f64();
            report.counters.sat_decisions = Some(sat.decisions);
            report.counters.sat_propagations = Some(sat.propagations);
            let result = match sat.verdict {
                Verdict::Sat => bfm_witness(&compiled, &sat).map(|w| (Verdict::Sat, Some(w))),
                Verdict::Unsat => Ok((Verdict::Unsat, None)),
            };
            *keep = Some(compiled);
            result
        }
        Engine::Split | Engine::Lazy => {
            let started = Instant::now();
            let (table, skeleton) = encode(&normalize(formula));
            report.phases.normalize = started.elapsed().as_secs_f64();
            report.counters.predicates = table.num_original();
            report.counters.instances = table.num_instances();
            let oracle_opts = OracleOptions { resolvent_cap: opts.cap, ..Default::default() };
            let started = Instant::now();
            let result = if opts.engine == Engine::Split {
                case_split_solve(&skeleton, &table, &oracle_opts)?
            } else {
                lazy_solve(&skeleton, &table, &oracle_opts)?
            };
            report.phases.elimination = started.elapsed().as_secs_f64();
            if opts.engine == Engine::Split {
                report.counters.split = Some(result.resolvents);
            } else {
                report.counters.comb = Some(result.resolvents);
            }
            report.counters.cubes_examined = Some(result.cubes_examined);
            Ok((result.verdict, result.witness))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    const EXAMPLE_1: &str = "x1 - x2 <= 0 & x1 - x3 <= 0 & -x1 + 2x3 + x2 <= 0 & -x3 <= -1";
    const EXAMPLE_2: &str = "2x1 - x2 <= 0 & (2x2 - 4x3 <= 0 | x3 - x1 <= -1)";

    fn opts(engine: Engine) -> SolveOptions {
        SolveOptions { engine, ..Default::default() }
    }

    #[test]
    fn all_engines_on_the_examples() {
        for engine in [Engine::Bfm, Engine::Split, Engine::Lazy] {
            let r = solve_formula(&parse(EXAMPLE_1).unwrap(), &opts(engine));
            assert_eq!(r.verdict, Some(Verdict::Unsat), "{engine}");
            let f = parse(EXAMPLE_2).unwrap();
            let out = solve_with_witness(&f, &opts(engine));
            assert_eq!(out.report.verdict, Some(Verdict::Sat), "{engine}");
            assert!(f.evaluate(&out.witness.unwrap()).unwrap());
            assert_eq!(out.report.witness.unwrap().len(), 3);
        }
    }

    #[test]
    fn example_2_counters_without_matrix() {
        let o = SolveOptions { matrix: None, ..Default::default() };
        let r = solve_formula(&parse(EXAMPLE_2).unwrap(), &o);
        assert_eq!(r.counters.derived_predicates, Some(1));
        assert_eq!(r.counters.contradictions, Some(1));
        assert_eq!(r.counters.implications, Some(2));
        assert_eq!(r.config.matrix, "off");
    }

    #[test]
    fn unknown_order_variable() {
        let o = SolveOptions { order: Some(vec!["y".into()]), ..Default::default() };
        let r = solve_formula(&parse(EXAMPLE_2).unwrap(), &o);
        assert_eq!(r.verdict, None);
        assert!(r.error.unwrap().contains("'y'"));
        assert!(!r.cap_hit);
    }

    #[test]
    fn cap_is_flagged() {
        let o = SolveOptions { cap: 0, ..Default::default() };
        let r = solve_formula(&parse(EXAMPLE_1).unwrap(), &o);
        assert_eq!(r.verdict, None);
        assert!(r.cap_hit);
    }

    #[test]
    fn trivial_formulas() {
        for engine in [Engine::Bfm, Engine::Split, Engine::Lazy] {
            let r = solve_formula(&parse("x - x <= 1").unwrap(), &opts(engine));
            assert_eq!(r.verdict, Some(Verdict::Sat));
            let r = solve_formula(&parse("x - x <= -1").unwrap(), &opts(engine));
            assert_eq!(r.verdict, Some(Verdict::Unsat));
        }
    }

    #[test]
    fn report_without_timing_is_stable() {
        let f = parse(EXAMPLE_2).unwrap();
        let a = solve_formula(&f, &opts(Engine::Bfm)).to_json_without_timing();
        let b = solve_formula(&f, &opts(Engine::Bfm)).to_json_without_timing();
        assert_eq!(a, b);
        assert!(!a.contains("phases"));
        assert!(a.contains("\"verdict\":\"sat\""));
    }
}
