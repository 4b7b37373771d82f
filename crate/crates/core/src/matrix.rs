//! Conjunctions matrices: which predicate pairs can meet in a clause of the
//! formula's DNF, computed from the skeleton without expanding it.

use serde::{Deserialize, Serialize};

use crate::normalize::{BooleanSkeleton, InstId, PredId, PredicateTable};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("instance {0} is not a leaf of the skeleton")]
    UnknownInstance(u32),
    #[error("an instance has no joining operand with itself")]
    SameInstance,
    #[error("cannot extend from e{} and e{}: they never share a clause", .0 + 1, .1 + 1)]
    NotConjoined(u32, u32),
}

/// Operator at the lowest common ancestor of two leaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JoinOp {
    And,
    Or,
}

/// How repeated predicates are treated when building the matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixMode {
    /// One row per predicate; a pair is marked if any two of their
    /// instances are conjoined.
    #[default]
    Merged,
    /// One row per instance; every occurrence is its own predicate.
    PerInstance,
}

impl std::str::FromStr for MatrixMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "merged" => Ok(MatrixMode::Merged),
            "per-instance" => Ok(MatrixMode::PerInstance),
            other => Err(format!("unknown matrix mode `{other}`")),
        }
    }
}

impl std::fmt::Display for MatrixMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MatrixMode::Merged => "merged",
            MatrixMode::PerInstance => "per-instance",
        })
    }
}

fn leaf_path(node: &BooleanSkeleton, target: InstId, path: &mut Vec<u32>) -> bool {
    match node {
        BooleanSkeleton::Leaf { inst, .. } => *inst == target,
        BooleanSkeleton::And(cs) | BooleanSkeleton::Or(cs) => {
            for (i, c) in cs.iter().enumerate() {
                path.push(i as u32);
                if leaf_path(c, target, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        BooleanSkeleton::Const(_) => false,
    }
}

fn join_of_paths(skeleton: &BooleanSkeleton, a: &[u32], b: &[u32]) -> JoinOp {
    let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    match skeleton.node_at(&a[..common]) {
        Some(BooleanSkeleton::And(_)) => JoinOp::And,
        Some(BooleanSkeleton::Or(_)) => JoinOp::Or,
        _ => unreachable!("distinct leaves meet at an internal node"),
    }
}

/// Operator of the lowest common ancestor of two leaf instances.
pub fn joining_operand(
    skeleton: &BooleanSkeleton,
    a: InstId,
    b: InstId,
) -> Result<JoinOp, MatrixError> {
    if a == b {
        return Err(MatrixError::SameInstance);
    }
    let find = |inst: InstId| {
        let mut path = Vec::new();
        if leaf_path(skeleton, inst, &mut path) {
            Ok(path)
        } else {
            Err(MatrixError::UnknownInstance(inst.0))
        }
    };
    let (pa, pb) = (find(a)?, find(b)?);
    Ok(join_of_paths(skeleton, &pa, &pb))
}

/// Symmetric 0/1 relation over predicate ids that grows as resolvents are
/// added. The diagonal is not stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConjunctionsMatrix {
    rows: Vec<Vec<u64>>,
}

impl ConjunctionsMatrix {
    pub fn new(size: usize) -> Self {
        ConjunctionsMatrix { rows: vec![Vec::new(); size] }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: PredId, j: PredId) -> bool {
        i != j && bit(&self.rows[i.index()], j.index())
    }

    pub fn set(&mut self, i: PredId, j: PredId) {
        if i == j {
            return;
        }
        set_bit(&mut self.rows[i.index()], j.index());
        set_bit(&mut self.rows[j.index()], i.index());
    }

    /// Ids marked in row `i`, in increasing order.
    pub fn row(&self, i: PredId) -> Vec<PredId> {
        ones(&self.rows[i.index()]).map(|l| PredId(l as u32)).collect()
    }

    /// Number of marked unordered pairs.
    pub fn count_ones(&self) -> usize {
        let total: u32 = self.rows.iter().flatten().map(|w| w.count_ones()).sum();
        total as usize / 2
    }

    /// Fills the row of `k`, the resolvent of `i` and `j`:
    /// `M[k,l] = M[i,l] ∧ M[j,l]` for every other id `l`, reading the
    /// diagonal as 1. If `k` already has a row (a re-derived constraint)
    /// the new entries are OR-ed into it.
    pub fn extend(&mut self, i: PredId, j: PredId, k: PredId) -> Result<(), MatrixError> {
        if !self.get(i, j) {
            return Err(MatrixError::NotConjoined(i.0, j.0));
        }
        while self.rows.len() <= k.index() {
            self.rows.push(Vec::new());
        }
        let ri = &self.rows[i.index()];
        let rj = &self.rows[j.index()];
        let words = ri.len().max(rj.len()).max(i.index() / 64 + 1).max(j.index() / 64 + 1);
        let mut fresh = Vec::with_capacity(words);
        for w in 0..words {
            let mut a = ri.get(w).copied().unwrap_or(0);
            let mut b = rj.get(w).copied().unwrap_or(0);
            if i.index() / 64 == w {
                a |= 1 << (i.index() % 64);
            }
            if j.index() / 64 == w {
                b |= 1 << (j.index() % 64);
            }
            fresh.push(a & b);
        }
        for l in ones(&fresh).collect::<Vec<_>>() {
            if l != k.index() && l < self.rows.len() {
                set_bit(&mut self.rows[k.index()], l);
                set_bit(&mut self.rows[l], k.index());
            }
        }
        Ok(())
    }
}

fn bit(row: &[u64], l: usize) -> bool {
    row.get(l / 64).is_some_and(|w| w >> (l % 64) & 1 == 1)
}

fn set_bit(row: &mut Vec<u64>, l: usize) {
    if row.len() <= l / 64 {
        row.resize(l / 64 + 1, 0);
    }
    row[l / 64] |= 1 << (l % 64);
}

fn ones(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &word)| {
        (0..64).filter(move |b| word >> b & 1 == 1).map(move |b| w * 64 + b)
    })
}

/// The initial matrix, by the naive lowest-common-ancestor walk over every
/// instance pair.
pub fn build_matrix(
    skeleton: &BooleanSkeleton,
    table: &PredicateTable,
    mode: MatrixMode,
) -> ConjunctionsMatrix {
    let insts = table.instances();
    let size = match mode {
        MatrixMode::Merged => table.num_original(),
        MatrixMode::PerInstance => insts.len(),
    };
    let mut m = ConjunctionsMatrix::new(size);
    for a in 0..insts.len() {
        for b in a + 1..insts.len() {
            let (ia, ib) = (&insts[a], &insts[b]);
            let (ka, kb) = match mode {
                MatrixMode::Merged => (ia.pred, ib.pred),
                MatrixMode::PerInstance => (PredId(a as u32), PredId(b as u32)),
            };
            if ka == kb || m.get(ka, kb) {
                continue;
            }
            if join_of_paths(skeleton, &ia.path, &ib.path) == JoinOp::And {
                m.set(ka, kb);
            }
        }
    }
    m
}
