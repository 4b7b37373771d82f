//! Propositional side: clausification of the skeleton plus implications,
//! a DPLL solver, and DIMACS export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bfm::Implication;
use crate::normalize::{BooleanSkeleton, PredId, PredicateTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Sat => "SAT",
            Verdict::Unsat => "UNSAT",
        })
    }
}

/// What a propositional variable stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    /// Predicate of an atom of the input formula.
    Original(PredId),
    /// Predicate introduced for a resolvent.
    Derived(PredId),
    /// Definition variable of an internal skeleton node.
    Aux,
}

/// CNF over variables `1..=num_vars`, literals as signed DIMACS integers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
    /// Empty for formulas built from raw clauses.
    roles: Vec<VarRole>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Self {
        assert!(
            clauses.iter().flatten().all(|l| *l != 0 && l.unsigned_abs() as usize <= num_vars),
            "literal out of range"
        );
        CnfFormula { num_vars, clauses, roles: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn roles(&self) -> &[VarRole] {
        &self.roles
    }

    pub fn role(&self, var: usize) -> Option<VarRole> {
        self.roles.get(var - 1).copied()
    }

    pub fn add_clause(&mut self, mut clause: Vec<i32>) {
        clause.dedup();
        let mut seen = Vec::with_capacity(clause.len());
        for l in clause {
            if !seen.contains(&l) {
                seen.push(l);
            }
        }
        self.clauses.push(seen);
    }

    fn fresh(&mut self, role: VarRole) -> i32 {
        self.num_vars += 1;
        self.roles.push(role);
        self.num_vars as i32
    }

    /// True when `model[v-1]` satisfies every clause.
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0)))
    }
}

pub fn pred_var(p: PredId) -> i32 {
    p.0 as i32 + 1
}

/// Clausifies `skeleton ∧ implications`.
///
/// Every internal node gets a definition variable `d` with only the
/// `d → node` direction encoded, which suffices for a negation-free
/// skeleton. Predicate `e_i` is variable `i + 1`.
pub fn build_cnf(
    skeleton: &BooleanSkeleton,
    implications: &[Implication],
    table: &PredicateTable,
) -> CnfFormula {
    let mut cnf = CnfFormula::default();
    for i in 0..table.len() {
        let p = PredId(i as u32);
        cnf.fresh(if table.is_original(p) { VarRole::Original(p) } else { VarRole::Derived(p) });
    }
    match skeleton {
        BooleanSkeleton::Const(true) => {}
        BooleanSkeleton::Const(false) => cnf.add_clause(Vec::new()),
        node => {
            let root = clausify(node, &mut cnf);
            cnf.add_clause(vec![root]);
        }
    }
    for imp in implications {
        let (i, j) = imp.antecedents;
        let mut clause = vec![-pred_var(i), -pred_var(j)];
        if let Some(k) = imp.consequent {
            clause.push(pred_var(k));
        }
        cnf.add_clause(clause);
    }
    cnf
}

fn clausify(node: &BooleanSkeleton, cnf: &mut CnfFormula) -> i32 {
    match node {
        BooleanSkeleton::Leaf { pred, .. } => pred_var(*pred),
        BooleanSkeleton::And(cs) => {
            let d = cnf.fresh(VarRole::Aux);
            for c in cs {
                let lit = clausify(c, cnf);
                cnf.add_clause(vec![-d, lit]);
            }
            d
        }
        BooleanSkeleton::Or(cs) => {
            let d = cnf.fresh(VarRole::Aux);
            let mut clause = vec![-d];
            for c in cs {
                clause.push(clausify(c, cnf));
            }
            cnf.add_clause(clause);
            d
        }
        BooleanSkeleton::Const(_) => unreachable!("constants only occur as the whole skeleton"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SatResult {
    pub verdict: Verdict,
    /// Value of every variable, `model[v-1]` for variable `v`, when SAT.
    pub model: Option<Vec<bool>>,
    pub decisions: u64,
    pub propagations: u64,
}

impl SatResult {
    /// Original predicates set true by the model.
    pub fn true_originals(&self, cnf: &CnfFormula) -> Vec<PredId> {
        let Some(model) = &self.model else { return Vec::new() };
        cnf.roles
            .iter()
            .zip(model)
            .filter_map(|(role, &val)| match role {
                VarRole::Original(p) if val => Some(*p),
                _ => None,
            })
            .collect()
    }
}

fn lit_index(l: i32) -> usize {
    2 * (l.unsigned_abs() as usize - 1) + (l < 0) as usize
}

struct Level {
    trail_pos: usize,
    lit: i32,
    flipped: bool,
}

struct Dpll<'a> {
    cnf: &'a CnfFormula,
    clauses: Vec<Vec<i32>>,
    watches: Vec<Vec<usize>>,
    values: Vec<Option<bool>>,
    trail: Vec<i32>,
    levels: Vec<Level>,
    qhead: usize,
    decisions: u64,
    propagations: u64,
}

impl<'a> Dpll<'a> {
    fn value(&self, l: i32) -> Option<bool> {
        self.values[l.unsigned_abs() as usize - 1].map(|v| v == (l > 0))
    }

    fn assign(&mut self, l: i32) {
        self.values[l.unsigned_abs() as usize - 1] = Some(l > 0);
        self.trail.push(l);
    }

    fn undo_to(&mut self, pos: usize) {
        for l in self.trail.drain(pos..) {
            self.values[l.unsigned_abs() as usize - 1] = None;
        }
        self.qhead = pos;
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let falsified = -self.trail[self.qhead];
            self.qhead += 1;
            let watching = std::mem::take(&mut self.watches[lit_index(falsified)]);
            let mut kept = Vec::with_capacity(watching.len());
            let mut conflict = false;
            let mut iter = watching.into_iter();
            for ci in iter.by_ref() {
                let clause = &mut self.clauses[ci];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.values[first.unsigned_abs() as usize - 1] == Some(first > 0) {
                    kept.push(ci);
                    continue;
                }
                let replacement = (2..clause.len()).find(|&k| {
                    let l = clause[k];
                    self.values[l.unsigned_abs() as usize - 1] != Some(l < 0)
                });
                if let Some(k) = replacement {
                    clause.swap(1, k);
                    let w = clause[1];
                    self.watches[lit_index(w)].push(ci);
                    continue;
                }
                kept.push(ci);
                match self.value(first) {
                    Some(false) => {
                        conflict = true;
                        break;
                    }
                    _ => {
                        self.assign(first);
                        self.propagations += 1;
                    }
                }
            }
            kept.extend(iter);
            self.watches[lit_index(falsified)] = kept;
            if conflict {
                return false;
            }
        }
        true
    }

    /// Pops levels until one can be flipped; false when none is left.
    fn backtrack(&mut self) -> bool {
        while let Some(level) = self.levels.pop() {
            self.undo_to(level.trail_pos);
            if !level.flipped {
                self.levels.push(Level { trail_pos: level.trail_pos, lit: -level.lit, flipped: true });
                self.assign(-level.lit);
                return true;
            }
        }
        false
    }

    fn eligible(&self, var: usize, restrict: bool) -> bool {
        !restrict
            || self.cnf.roles.is_empty()
            || matches!(self.cnf.roles[var], VarRole::Original(_))
    }

    /// Completes a restricted search: unassigned definition variables are
    /// set true and unassigned derived predicates false, then every clause
    /// is checked.
    fn complete(&mut self) -> Option<Vec<bool>> {
        let model: Vec<bool> = self
            .values
            .iter()
            .enumerate()
            .map(|(v, val)| val.unwrap_or(matches!(self.cnf.roles.get(v), Some(VarRole::Aux))))
            .collect();
        self.cnf.is_satisfied_by(&model).then_some(model)
    }

    fn solve(mut self, restrict: bool) -> SatResult {
        let unsat = |s: &Self| SatResult {
            verdict: Verdict::Unsat,
            model: None,
            decisions: s.decisions,
            propagations: s.propagations,
        };
        let mut units = Vec::new();
        for (ci, clause) in self.clauses.iter().enumerate() {
            match clause.len() {
                0 => return unsat(&self),
                1 => units.push(clause[0]),
                _ => {
                    self.watches[lit_index(clause[0])].push(ci);
                    self.watches[lit_index(clause[1])].push(ci);
                }
            }
        }
        for l in units {
            match self.value(l) {
                Some(true) => {}
                Some(false) => return unsat(&self),
                None => self.assign(l),
            }
        }
        let mut cursor = 0;
        loop {
            if !self.propagate() {
                if !self.backtrack() {
                    return unsat(&self);
                }
                cursor = 0;
                continue;
            }
            while cursor < self.values.len()
                && (self.values[cursor].is_some() || !self.eligible(cursor, restrict))
            {
                cursor += 1;
            }
            if cursor == self.values.len() {
                let model = if restrict { self.complete() } else { self.values.iter().map(|v| v.unwrap()).collect::<Vec<_>>().into() };
                match model {
                    Some(model) => {
                        return SatResult {
                            verdict: Verdict::Sat,
                            model: Some(model),
                            decisions: self.decisions,
                            propagations: self.propagations,
                        }
                    }
                    None => {
                        debug_assert!(false, "restricted assignment failed to extend");
                        if !self.backtrack() {
                            return unsat(&self);
                        }
                        cursor = 0;
                        continue;
                    }
                }
            }
            self.decisions += 1;
            let lit = -(cursor as i32 + 1);
            self.levels.push(Level { trail_pos: self.trail.len(), lit, flipped: false });
            self.assign(lit);
        }
    }
}

/// Complete DPLL with unit propagation and chronological backtracking.
///
/// With `restrict`, only original-predicate variables are branched on; the
/// rest are settled by propagation.
pub fn solve_cnf(cnf: &CnfFormula, restrict: bool) -> SatResult {
    let n = cnf.num_vars;
    let solver = Dpll {
        cnf,
        clauses: cnf.clauses.clone(),
        watches: vec![Vec::new(); 2 * n],
        values: vec![None; n],
        trail: Vec::with_capacity(n),
        levels: Vec::new(),
        qhead: 0,
        decisions: 0,
        propagations: 0,
    };
    solver.solve(restrict)
}

/// Standard DIMACS CNF text. Variable roles, when known, are listed as
/// comment lines ahead of the header.
pub fn export_dimacs(cnf: &CnfFormula) -> String {
    let mut out = String::new();
    for (i, role) in cnf.roles.iter().enumerate() {
        let _ = match role {
            VarRole::Original(p) => writeln!(out, "c var {} original {}", i + 1, p),
            VarRole::Derived(p) => writeln!(out, "c var {} derived {}", i + 1, p),
            VarRole::Aux => writeln!(out, "c var {} aux", i + 1),
        };
    }
    let _ = writeln!(out, "p cnf {} {}", cnf.num_vars, cnf.clauses.len());
    for clause in &cnf.clauses {
        for l in clause {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bfm::{run_bfm, BfmOptions};
    use crate::constraint::VarId;
    use crate::normalize::{encode, normalize};
    use crate::parser::parse;
    use proptest::prelude::*;

    fn brute_force(cnf: &CnfFormula) -> bool {
        let n = cnf.num_vars();
        (0u64..1 << n).any(|bits| {
            let model: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            cnf.is_satisfied_by(&model)
        })
    }

    fn example_2_cnf(matrix: bool) -> (CnfFormula, PredicateTable) {
        let (table, skel) =
            encode(&normalize(&parse("2x1 - x2 <= 0 & (2x2 - 4x3 <= 0 | x3 - x1 <= -1)").unwrap()));
        let opts = BfmOptions {
            matrix: matrix.then_some(crate::matrix::MatrixMode::Merged),
            order: Some(vec![VarId(0), VarId(1), VarId(2)]),
            ..Default::default()
        };
        let r = run_bfm(&table, &skel, &opts).unwrap();
        (build_cnf(&r.skeleton, &r.implications, &r.table), r.table)
    }

    #[test]
    fn clausifies_example_2() {
        let (cnf, _) = example_2_cnf(false);
        // e1..e4 are 1..4, root is 5, the disjunction 6
        assert_eq!(
            cnf.clauses(),
            &[vec![-5, 1], vec![-6, 2, 3], vec![-5, 6], vec![5], vec![-1, -3, 4], vec![-2, -4]]
        );
        assert_eq!(cnf.role(4), Some(VarRole::Derived(PredId(3))));
        assert_eq!(cnf.role(6), Some(VarRole::Aux));
        for restrict in [true, false] {
            let r = solve_cnf(&cnf, restrict);
            assert_eq!(r.verdict, Verdict::Sat);
            let model = r.model.unwrap();
            assert!(cnf.is_satisfied_by(&model));
            assert!(model[0]);
            assert!(model[1] != model[2] || !model[1]);
            assert!(!(model[3] && model[1]));
        }
    }

    #[test]
    fn single_leaf_is_a_unit() {
        let (table, skel) = encode(&normalize(&parse("x1 <= 0").unwrap()));
        let cnf = build_cnf(&skel, &[], &table);
        assert_eq!(cnf.clauses(), &[vec![1]]);
        assert_eq!(export_dimacs(&CnfFormula::new(1, vec![vec![1]])), "p cnf 1 1\n1 0\n");
    }

    #[test]
    fn self_contradiction() {
        let (table, skel) = encode(&normalize(&parse("x1 <= 0").unwrap()));
        let imp = Implication { antecedents: (PredId(0), PredId(0)), consequent: None };
        let cnf = build_cnf(&skel, &[imp], &table);
        assert_eq!(cnf.clauses(), &[vec![1], vec![-1]]);
        assert_eq!(solve_cnf(&cnf, true).verdict, Verdict::Unsat);
    }

    #[test]
    fn constant_skeletons() {
        let table = PredicateTable::default();
        let t = build_cnf(&BooleanSkeleton::Const(true), &[], &table);
        assert_eq!(solve_cnf(&t, true).verdict, Verdict::Sat);
        let f = build_cnf(&BooleanSkeleton::Const(false), &[], &table);
        assert_eq!(f.clauses(), &[Vec::<i32>::new()]);
        assert_eq!(solve_cnf(&f, true).verdict, Verdict::Unsat);
        assert_eq!(export_dimacs(&f), "p cnf 0 1\n0\n");
    }

    #[test]
    fn dimacs_format() {
        assert_eq!(export_dimacs(&CnfFormula::new(0, vec![])), "p cnf 0 0\n");
        let (cnf, _) = example_2_cnf(true);
        let text = export_dimacs(&cnf);
        assert!(text.starts_with("c var 1 original e1\n"));
        assert!(text.contains("c var 4 derived e4\n"));
        assert!(text.contains("p cnf 6 5\n"));
        assert!(text.ends_with("-1 -3 4 0\n"));
    }

    fn arb_cnf() -> impl Strategy<Value = CnfFormula> {
        (1usize..=8).prop_flat_map(|n| {
            let lit = (1..=n as i32, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v });
            prop::collection::vec(prop::collection::vec(lit, 1..4), 0..30)
                .prop_map(move |cs| CnfFormula::new(n, cs))
        })
    }

    proptest! {
        #[test]
        fn dpll_matches_brute_force(cnf in arb_cnf()) {
            let r = solve_cnf(&cnf, false);
            prop_assert_eq!(r.verdict == Verdict::Sat, brute_force(&cnf));
            if let Some(model) = r.model {
                prop_assert!(cnf.is_satisfied_by(&model));
            }
        }
    }
}
