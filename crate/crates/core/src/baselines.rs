//! Reference procedures: case splitting over DNF cubes and the lazy
//! SAT/FM loop, both built on plain Fourier-Motzkin with witness
//! back-substitution.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use num_traits::{One, Signed, Zero};

use crate::bfm::{bound_counts, pick_variable, DEFAULT_RESOLVENT_CAP};
use crate::constraint::{resolve, CanonResult, LinearConstraint, Point, VarId};
use crate::normalize::{BooleanSkeleton, PredId, PredicateTable};
use crate::rational::Rational;
use crate::sat::{build_cnf, solve_cnf, Verdict};

pub const DEFAULT_CUBE_CAP: usize = 1_000_000;
pub const DEFAULT_ITERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("more than {cap} DNF cubes examined")]
    CubeCap { cap: usize },
    #[error("more than {cap} abstraction models examined")]
    IterationCap { cap: usize },
    #[error("blow-up: more than {cap} resolvents generated")]
    BlowUp { cap: usize },
    #[error("witness check failed: {0}")]
    Witness(String),
}

#[derive(Clone, Debug)]
pub struct OracleOptions {
    pub cube_cap: usize,
    pub iteration_cap: usize,
    /// Applies to each single elimination run.
    pub resolvent_cap: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            cube_cap: DEFAULT_CUBE_CAP,
            iteration_cap: DEFAULT_ITERATION_CAP,
            resolvent_cap: DEFAULT_RESOLVENT_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub verdict: Verdict,
    /// Satisfying point over every variable of the predicate table.
    pub witness: Option<Point>,
    /// Proper resolvents generated over all elimination runs, repeats
    /// included; contradictions are not counted. This is the split count
    /// for case splitting and the comb count for the lazy loop.
    pub resolvents: usize,
    /// Cubes tried by case splitting, abstraction models by the lazy loop.
    pub cubes_examined: usize,
}

/// Bounds on one variable at the moment it was eliminated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub var: VarId,
    pub lowers: Vec<LinearConstraint>,
    pub uppers: Vec<LinearConstraint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FmRun {
    pub feasible: bool,
    /// Resolutions yielding a non-constant constraint.
    pub resolvents: usize,
    /// 0 or 1, since the run stops at the first one.
    pub contradictions: usize,
    pub tautologies: usize,
    pub trace: Vec<TraceStep>,
}

/// Plain FM on a conjunction, stopping at the first contradiction.
/// Variables are chosen by the same greedy rule as the Boolean run.
pub fn fm_check(constraints: &[LinearConstraint], cap: usize) -> Result<FmRun, OracleError> {
    let mut active: BTreeSet<LinearConstraint> = constraints.iter().cloned().collect();
    let mut run = FmRun { feasible: true, resolvents: 0, contradictions: 0, tautologies: 0, trace: Vec::new() };
    while let Some(v) = pick_variable(&bound_counts(active.iter())) {
        let mut step = TraceStep { var: v, lowers: Vec::new(), uppers: Vec::new() };
        let mut rest = BTreeSet::new();
        for c in active {
            match c.coeff(v) {
                Some(a) if a.is_positive() => step.uppers.push(c),
                Some(_) => step.lowers.push(c),
                None => {
                    rest.insert(c);
                }
            }
        }
        for u in &step.uppers {
            for l in &step.lowers {
                match resolve(u, l, v).expect("bound segments have opposite signs") {
                    CanonResult::Canonical(k) => {
                        run.resolvents += 1;
                        rest.insert(k);
                    }
                    CanonResult::Contradiction => {
                        run.contradictions += 1;
                        run.feasible = false;
                        run.trace.push(step);
                        return Ok(run);
                    }
                    CanonResult::Tautology => run.tautologies += 1,
                }
                if run.resolvents + run.contradictions > cap {
                    return Err(OracleError::BlowUp { cap });
                }
            }
        }
        run.trace.push(step);
        active = rest;
    }
    Ok(run)
}

/// Back-substitutes through a feasible elimination trace.
///
/// Variables are fixed in reverse elimination order: the midpoint of the
/// residual interval when bounded on both sides, one unit past the bound
/// when bounded on one side, zero when free.
pub fn extract_witness(cube: &[LinearConstraint], trace: &[TraceStep]) -> Result<Point, OracleError> {
    let mut point = Point::new();
    for step in trace.iter().rev() {
        let lo = tightest(&step.lowers, step.var, &mut point, true);
        let up = tightest(&step.uppers, step.var, &mut point, false);
        let value = match (lo, up) {
            (Some(l), Some(u)) => (l + u) / Rational::from_integer(2.into()),
            (Some(l), None) => l + Rational::one(),
            (None, Some(u)) => u - Rational::one(),
            (None, None) => Rational::zero(),
        };
        point.insert(step.var, value);
    }
    for c in cube {
        for v in c.vars() {
            point.entry(v).or_insert_with(Rational::zero);
        }
    }
    for c in cube {
        let ok = c.evaluate(&point).map_err(|e| OracleError::Witness(e.to_string()))?;
        if !ok {
            return Err(OracleError::Witness(format!("point violates {c}")));
        }
    }
    Ok(point)
}

/// Strongest bound on `v` implied by `bounds` under `point`.
fn tightest(
    bounds: &[LinearConstraint],
    v: VarId,
    point: &mut Point,
    lower: bool,
) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for c in bounds {
        let a = c.coeff(v).expect("trace bound mentions its variable");
        let mut rest = c.bound().clone();
        for (w, b) in c.terms() {
            if *w != v {
                // a variable that vanished without its own step is free
                let x = point.entry(*w).or_insert_with(Rational::zero);
                rest -= b * &*x;
            }
        }
        let value = rest / a;
        best = match best {
            Some(b) if (lower && b >= value) || (!lower && b <= value) => Some(b),
            _ => Some(value),
        };
    }
    best
}

/// Calls `f` on each DNF cube of `skeleton`, left to right over disjunctions,
/// without materializing the DNF.
pub fn for_each_cube(
    skeleton: &BooleanSkeleton,
    f: &mut dyn FnMut(&[PredId]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    cubes(&[skeleton], &mut Vec::new(), f)
}

fn cubes(
    pending: &[&BooleanSkeleton],
    acc: &mut Vec<PredId>,
    f: &mut dyn FnMut(&[PredId]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let Some((first, rest)) = pending.split_first() else {
        return f(acc);
    };
    match first {
        BooleanSkeleton::Leaf { pred, .. } => {
            acc.push(*pred);
            let r = cubes(rest, acc, f);
            acc.pop();
            r
        }
        BooleanSkeleton::And(cs) => {
            let mut next: Vec<&BooleanSkeleton> = cs.iter().collect();
            next.extend_from_slice(rest);
            cubes(&next, acc, f)
        }
        BooleanSkeleton::Or(cs) => {
            for c in cs {
                let mut next = vec![c];
                next.extend_from_slice(rest);
                cubes(&next, acc, f)?;
            }
            ControlFlow::Continue(())
        }
        BooleanSkeleton::Const(true) => cubes(rest, acc, f),
        BooleanSkeleton::Const(false) => ControlFlow::Continue(()),
    }
}

fn distinct(preds: &[PredId]) -> Vec<PredId> {
    let mut seen = BTreeSet::new();
    preds.iter().copied().filter(|p| seen.insert(*p)).collect()
}

/// Decides the conjunction of `preds`, returning a witness when feasible.
pub fn decide_conjunction(
    preds: &[PredId],
    table: &PredicateTable,
    cap: usize,
) -> Result<(FmRun, Option<Point>), OracleError> {
    let cube: Vec<LinearConstraint> =
        distinct(preds).into_iter().map(|p| table.constraint(p).clone()).collect();
    let run = fm_check(&cube, cap)?;
    let witness = if run.feasible { Some(extract_witness(&cube, &run.trace)?) } else { None };
    Ok((run, witness))
}

fn pad(mut point: Point, table: &PredicateTable) -> Point {
    for c in table.constraints() {
        for v in c.vars() {
            point.entry(v).or_insert_with(Rational::zero);
        }
    }
    point
}

/// Case splitting: decides each DNF cube by FM until one is feasible.
pub fn case_split_solve(
    skeleton: &BooleanSkeleton,
    table: &PredicateTable,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    let mut result =
        OracleResult { verdict: Verdict::Unsat, witness: None, resolvents: 0, cubes_examined: 0 };
    let mut error = None;
    let _ = for_each_cube(skeleton, &mut |cube| {
        if result.cubes_examined == opts.cube_cap {
            error = Some(OracleError::CubeCap { cap: opts.cube_cap });
            return ControlFlow::Break(());
        }
        result.cubes_examined += 1;
        match decide_conjunction(cube, table, opts.resolvent_cap) {
            Ok((run, witness)) => {
                result.resolvents += run.resolvents;
                if let Some(w) = witness {
                    result.verdict = Verdict::Sat;
                    result.witness = Some(pad(w, table));
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            }
            Err(e) => {
                error = Some(e);
                ControlFlow::Break(())
            }
        }
    });
    match error {
        Some(e) => Err(e),
        None => Ok(result),
    }
}

/// Lazy loop: propositional models of the skeleton are checked by FM and
/// blocked as a whole when inconsistent.
pub fn lazy_solve(
    skeleton: &BooleanSkeleton,
    table: &PredicateTable,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    let mut cnf = build_cnf(skeleton, &[], table);
    let mut result =
        OracleResult { verdict: Verdict::Unsat, witness: None, resolvents: 0, cubes_examined: 0 };
    loop {
        let sat = solve_cnf(&cnf, true);
        if sat.verdict == Verdict::Unsat {
            return Ok(result);
        }
        if result.cubes_examined == opts.iteration_cap {
            return Err(OracleError::IterationCap { cap: opts.iteration_cap });
        }
        result.cubes_examined += 1;
        let chosen = sat.true_originals(&cnf);
        let (run, witness) = decide_conjunction(&chosen, table, opts.resolvent_cap)?;
        result.resolvents += run.resolvents;
        if let Some(w) = witness {
            result.verdict = Verdict::Sat;
            result.witness = Some(pad(w, table));
            return Ok(result);
        }
        cnf.add_clause(chosen.iter().map(|p| -crate::sat::pred_var(*p)).collect());
    }
}
