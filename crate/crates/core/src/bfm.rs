//! Boolean Fourier-Motzkin: one elimination run over every predicate of the
//! formula, recording each derivation as a Horn clause.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use num_traits::Signed;
use serde::Serialize;

use crate::constraint::{resolve, CanonResult, LinearConstraint, VarId};
use crate::matrix::{build_matrix, ConjunctionsMatrix, MatrixMode};
use crate::normalize::{BooleanSkeleton, PredId, PredicateTable};

pub const DEFAULT_RESOLVENT_CAP: usize = 1_000_000;

/// `e_i ∧ e_j → e_k`, or `e_i ∧ e_j → false` when `consequent` is `None`.
/// As a clause `¬e_i ∨ ¬e_j ∨ e_k` it has at most one positive literal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Implication {
    pub antecedents: (PredId, PredId),
    pub consequent: Option<PredId>,
}

impl Implication {
    /// Clause literals as `(predicate, polarity)`.
    pub fn literals(&self) -> Vec<(PredId, bool)> {
        let mut lits = vec![(self.antecedents.0, false), (self.antecedents.1, false)];
        if let Some(k) = self.consequent {
            lits.push((k, true));
        }
        lits
    }
}

impl fmt::Display for Implication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = self.antecedents;
        match self.consequent {
            Some(k) => write!(f, "{i} & {j} -> {k}"),
            None => write!(f, "{i} & {j} -> false"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BfmCounters {
    /// Resolutions that produced a proper constraint, re-derivations included.
    pub resolvents: usize,
    /// Resolutions that produced a constant contradiction.
    pub contradictions: usize,
    pub tautologies: usize,
    /// Fresh predicate ids created for resolvents.
    pub derived_predicates: usize,
    /// Bound pairs skipped because the matrix marks them as never conjoined.
    pub pairs_pruned: usize,
}

impl BfmCounters {
    /// All non-tautological resolutions; this is what the cap limits.
    pub fn generated(&self) -> usize {
        self.resolvents + self.contradictions
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BfmError {
    #[error("blow-up: more than {cap} resolvents generated")]
    BlowUp { cap: usize },
}

#[derive(Clone, Debug)]
pub struct BfmOptions {
    /// `None` resolves every bound pair.
    pub matrix: Option<MatrixMode>,
    /// Variables to eliminate first, in this order; the heuristic picks the rest.
    pub order: Option<Vec<VarId>>,
    pub cap: usize,
}

impl Default for BfmOptions {
    fn default() -> Self {
        BfmOptions { matrix: Some(MatrixMode::Merged), order: None, cap: DEFAULT_RESOLVENT_CAP }
    }
}

#[derive(Clone, Debug)]
pub struct BfmResult {
    pub table: PredicateTable,
    pub skeleton: BooleanSkeleton,
    pub implications: Vec<Implication>,
    pub counters: BfmCounters,
    pub order: Vec<VarId>,
    pub matrix: Option<ConjunctionsMatrix>,
    pub matrix_time: Duration,
    pub elimination_time: Duration,
}

/// Working state of one elimination run.
#[derive(Clone, Debug)]
pub struct EliminationState {
    pub table: PredicateTable,
    active: Vec<PredId>,
    pub matrix: Option<ConjunctionsMatrix>,
    pub implications: Vec<Implication>,
    pub counters: BfmCounters,
    pub eliminated: Vec<VarId>,
    cap: usize,
}

impl EliminationState {
    /// Starts with every predicate of `table` active.
    pub fn new(table: PredicateTable, matrix: Option<ConjunctionsMatrix>, cap: usize) -> Self {
        let active = (0..table.len() as u32).map(PredId).collect();
        EliminationState {
            table,
            active,
            matrix,
            implications: Vec::new(),
            counters: BfmCounters::default(),
            eliminated: Vec::new(),
            cap,
        }
    }

    pub fn active(&self) -> &[PredId] {
        &self.active
    }

    /// Variables still occurring in active constraints, with their
    /// (lower, upper) bound counts.
    pub fn bound_counts(&self) -> BTreeMap<VarId, (u64, u64)> {
        bound_counts(self.active.iter().map(|id| self.table.constraint(*id)))
    }

    /// The variable whose elimination pairs the fewest bounds; ties go to
    /// the smallest index. `None` once no variable is left.
    pub fn next_variable(&self) -> Option<VarId> {
        pick_variable(&self.bound_counts())
    }

    /// Resolves every (upper, lower) pair on `v` allowed by the matrix and
    /// retires all constraints mentioning `v`.
    pub fn eliminate_variable(&mut self, v: VarId) -> Result<(), BfmError> {
        let mut uppers = Vec::new();
        let mut lowers = Vec::new();
        let mut rest = Vec::new();
        for &id in &self.active {
            let c = self.table.constraint(id);
            match c.coeff(v) {
                Some(a) if a.is_positive() => uppers.push((id, c.clone())),
                Some(_) => lowers.push((id, c.clone())),
                None => rest.push(id),
            }
        }
        let mut fresh = Vec::new();
        for (u, cu) in &uppers {
            for (l, cl) in &lowers {
                if let Some(m) = &self.matrix {
                    if !m.get(*u, *l) {
                        self.counters.pairs_pruned += 1;
                        continue;
                    }
                }
                let outcome = resolve(cu, cl, v).expect("bound segments have opposite signs");
                match outcome {
                    CanonResult::Canonical(k) => {
                        let (k, is_new) = self.table.intern(k);
                        if is_new {
                            self.counters.derived_predicates += 1;
                            fresh.push(k);
                        }
                        if let Some(m) = &mut self.matrix {
                            m.extend(*u, *l, k).expect("pair was checked against the matrix");
                        }
                        self.implications.push(Implication { antecedents: (*u, *l), consequent: Some(k) });
                        self.counters.resolvents += 1;
                    }
                    CanonResult::Contradiction => {
                        self.implications.push(Implication { antecedents: (*u, *l), consequent: None });
                        self.counters.contradictions += 1;
                    }
                    CanonResult::Tautology => self.counters.tautologies += 1,
                }
                if self.counters.generated() > self.cap {
                    return Err(BfmError::BlowUp { cap: self.cap });
                }
            }
        }
        rest.extend(fresh);
        self.active = rest;
        self.eliminated.push(v);
        Ok(())
    }
}

pub(crate) fn bound_counts<'a>(
    constraints: impl Iterator<Item = &'a LinearConstraint>,
) -> BTreeMap<VarId, (u64, u64)> {
    let mut counts: BTreeMap<VarId, (u64, u64)> = BTreeMap::new();
    for c in constraints {
        for (v, a) in c.terms() {
            let e = counts.entry(*v).or_default();
            if a.is_positive() {
                e.1 += 1;
            } else {
                e.0 += 1;
            }
        }
    }
    counts
}

pub(crate) fn pick_variable(counts: &BTreeMap<VarId, (u64, u64)>) -> Option<VarId> {
    // BTreeMap iterates by increasing id, so min_by_key keeps the first minimum.
    counts
        .iter()
        .min_by_key(|(_, (lo, up))| lo * up)
        .map(|(v, _)| *v)
}

/// Runs the elimination over all predicates of an encoded formula.
pub fn run_bfm(
    table: &PredicateTable,
    skeleton: &BooleanSkeleton,
    opts: &BfmOptions,
) -> Result<BfmResult, BfmError> {
    let (table, skeleton) = match opts.matrix {
        Some(MatrixMode::PerInstance) => table.split_instances(skeleton),
        _ => (table.clone(), skeleton.clone()),
    };
    let started = Instant::now();
    let matrix = opts.matrix.map(|mode| build_matrix(&skeleton, &table, mode));
    let matrix_time = started.elapsed();
    let started = Instant::now();
    let mut state = EliminationState::new(table, matrix, opts.cap);
    let mut forced = opts.order.clone().unwrap_or_default().into_iter();
    loop {
        let counts = state.bound_counts();
        let next = forced
            .by_ref()
            .find(|v| counts.contains_key(v))
            .or_else(|| pick_variable(&counts));
        match next {
            Some(v) => state.eliminate_variable(v)?,
            None => break,
        }
    }
    Ok(BfmResult {
        table: state.table,
        skeleton,
        implications: state.implications,
        counters: state.counters,
        order: state.eliminated,
        matrix: state.matrix,
        matrix_time,
        elimination_time: started.elapsed(),
    })
}
