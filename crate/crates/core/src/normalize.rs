//! Normalization to negation-free form and encoding of atoms as Boolean
//! predicates.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::{CanonResult, LinearConstraint};
use crate::formula::{Atom, Formula, FormulaAst, RelOp};

/// Identifier of a Boolean predicate `e_i` standing for a canonical constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredId(pub u32);

impl PredId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0 + 1)
    }
}

/// Identifier of one leaf occurrence of a predicate in the skeleton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InstId(pub u32);

impl InstId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The formula with every atom replaced by its predicate.
///
/// `Const` only ever appears as the whole skeleton, when constant folding
/// decided the formula outright.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BooleanSkeleton {
    And(Vec<BooleanSkeleton>),
    Or(Vec<BooleanSkeleton>),
    Leaf { pred: PredId, inst: InstId },
    Const(bool),
}

impl BooleanSkeleton {
    pub fn leaves(&self) -> Vec<(PredId, InstId)> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |p, i| out.push((p, i)));
        out
    }

    fn visit_leaves(&self, f: &mut impl FnMut(PredId, InstId)) {
        match self {
            BooleanSkeleton::And(cs) | BooleanSkeleton::Or(cs) => {
                cs.iter().for_each(|c| c.visit_leaves(f))
            }
            BooleanSkeleton::Leaf { pred, inst } => f(*pred, *inst),
            BooleanSkeleton::Const(_) => {}
        }
    }

    /// Truth value when exactly the predicates accepted by `holds` are true.
    pub fn eval(&self, holds: &impl Fn(PredId) -> bool) -> bool {
        match self {
            BooleanSkeleton::And(cs) => cs.iter().all(|c| c.eval(holds)),
            BooleanSkeleton::Or(cs) => cs.iter().any(|c| c.eval(holds)),
            BooleanSkeleton::Leaf { pred, .. } => holds(*pred),
            BooleanSkeleton::Const(b) => *b,
        }
    }

    /// Node at the given child-index path.
    pub fn node_at(&self, path: &[u32]) -> Option<&BooleanSkeleton> {
        let mut node = self;
        for &step in path {
            node = match node {
                BooleanSkeleton::And(cs) | BooleanSkeleton::Or(cs) => cs.get(step as usize)?,
                _ => return None,
            };
        }
        Some(node)
    }

    pub fn height(&self) -> usize {
        match self {
            BooleanSkeleton::And(cs) | BooleanSkeleton::Or(cs) => {
                1 + cs.iter().map(BooleanSkeleton::height).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// Renders as `e1 & (e2 | e3)`.
    pub fn render(&self) -> String {
        fn go(node: &BooleanSkeleton, in_and: bool, out: &mut String) {
            match node {
                BooleanSkeleton::And(cs) | BooleanSkeleton::Or(cs) => {
                    let conj = matches!(node, BooleanSkeleton::And(_));
                    let paren = in_and && !conj;
                    if paren {
                        out.push('(');
                    }
                    for (i, c) in cs.iter().enumerate() {
                        if i > 0 {
                            out.push_str(if conj { " & " } else { " | " });
                        }
                        go(c, conj, out);
                    }
                    if paren {
                        out.push(')');
                    }
                }
                BooleanSkeleton::Leaf { pred, .. } => out.push_str(&pred.to_string()),
                BooleanSkeleton::Const(b) => out.push_str(if *b { "true" } else { "false" }),
            }
        }
        let mut out = String::new();
        go(self, false, &mut out);
        out
    }
}

/// One leaf occurrence: its predicate and the child-index path from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub pred: PredId,
    pub path: Vec<u32>,
}

/// Maps canonical constraints to predicate ids.
///
/// Ids below `num_original()` come from the formula's atoms; the fm-engine
/// appends derived predicates through [`PredicateTable::intern`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PredicateTable {
    constraints: Vec<LinearConstraint>,
    index: HashMap<LinearConstraint, PredId>,
    originals: usize,
    instances: Vec<Instance>,
    folded_true: usize,
    folded_false: usize,
}

impl PredicateTable {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn num_original(&self) -> usize {
        self.originals
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    pub fn is_original(&self, id: PredId) -> bool {
        id.index() < self.originals
    }

    pub fn constraint(&self, id: PredId) -> &LinearConstraint {
        &self.constraints[id.index()]
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn lookup(&self, c: &LinearConstraint) -> Option<PredId> {
        self.index.get(c).copied()
    }

    /// Returns the id for `c`, creating one if needed; the flag is true for
    /// a fresh id.
    pub fn intern(&mut self, c: LinearConstraint) -> (PredId, bool) {
        if let Some(id) = self.index.get(&c) {
            return (*id, false);
        }
        let id = PredId(self.constraints.len() as u32);
        self.index.insert(c.clone(), id);
        self.constraints.push(c);
        (id, true)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn instance(&self, inst: InstId) -> Option<&Instance> {
        self.instances.get(inst.index())
    }

    /// Atoms decided at encoding time, as `(tautologies, contradictions)`.
    pub fn folded_constants(&self) -> (usize, usize) {
        (self.folded_true, self.folded_false)
    }

    /// Gives every instance its own predicate: instance `k` becomes
    /// predicate `k`. Used for the per-instance conjunctions matrix.
    pub fn split_instances(&self, skeleton: &BooleanSkeleton) -> (PredicateTable, BooleanSkeleton) {
        let mut table = PredicateTable {
            folded_true: self.folded_true,
            folded_false: self.folded_false,
            ..Default::default()
        };
        for (k, inst) in self.instances.iter().enumerate() {
            let c = self.constraint(inst.pred).clone();
            table.index.entry(c.clone()).or_insert(PredId(k as u32));
            table.constraints.push(c);
            table.instances.push(Instance { pred: PredId(k as u32), path: inst.path.clone() });
        }
        table.originals = table.constraints.len();
        fn relabel(node: &BooleanSkeleton) -> BooleanSkeleton {
            match node {
                BooleanSkeleton::And(cs) => BooleanSkeleton::And(cs.iter().map(relabel).collect()),
                BooleanSkeleton::Or(cs) => BooleanSkeleton::Or(cs.iter().map(relabel).collect()),
                BooleanSkeleton::Leaf { inst, .. } => {
                    BooleanSkeleton::Leaf { pred: PredId(inst.0), inst: *inst }
                }
                BooleanSkeleton::Const(b) => BooleanSkeleton::Const(*b),
            }
        }
        (table, relabel(skeleton))
    }
}

/// Rewrites equalities, pushes negations to the atoms and flips the negated
/// atoms, leaving only `And`, `Or` and `<=`/`<` atoms.
pub fn normalize(formula: &Formula) -> Formula {
    Formula { vars: formula.vars.clone(), root: nnf(&formula.root, true) }
}

fn nnf(node: &FormulaAst, positive: bool) -> FormulaAst {
    match node {
        FormulaAst::And(cs) if positive => FormulaAst::and(cs.iter().map(|c| nnf(c, true))),
        FormulaAst::And(cs) => FormulaAst::or(cs.iter().map(|c| nnf(c, false))),
        FormulaAst::Or(cs) if positive => FormulaAst::or(cs.iter().map(|c| nnf(c, true))),
        FormulaAst::Or(cs) => FormulaAst::and(cs.iter().map(|c| nnf(c, false))),
        FormulaAst::Not(c) => nnf(c, !positive),
        FormulaAst::Atom(a) => atom_nnf(a, positive),
    }
}

fn atom_nnf(a: &Atom, positive: bool) -> FormulaAst {
    let le = || LinearConstraint::le(a.lhs().iter().cloned(), a.rhs.clone());
    let leaf = |c: LinearConstraint| FormulaAst::Atom(constraint_atom(&c));
    match (a.op, positive) {
        (RelOp::Le | RelOp::Lt, true) => FormulaAst::Atom(a.clone()),
        (RelOp::Le | RelOp::Lt, false) => leaf(a.to_constraint().unwrap().negated()),
        // a = b  ~>  a <= b & -a <= -b
        (RelOp::Eq, true) | (RelOp::Ne, false) => {
            let up = le();
            let down = up.negated().negated_strictness();
            FormulaAst::and([leaf(up), leaf(down)])
        }
        // !(a <= b & -a <= -b)  ~>  -a < -b | a < b, listed as a < b | -a < -b
        (RelOp::Ne, true) | (RelOp::Eq, false) => {
            let up = le();
            FormulaAst::or([leaf(up.negated_strictness()), leaf(up.negated())])
        }
    }
}

fn constraint_atom(c: &LinearConstraint) -> Atom {
    let op = if c.is_strict() { RelOp::Lt } else { RelOp::Le };
    Atom::new(c.terms().iter().cloned(), op, c.bound().clone())
}

impl LinearConstraint {
    fn negated_strictness(&self) -> LinearConstraint {
        LinearConstraint::new(self.terms().iter().cloned(), self.bound().clone(), !self.is_strict())
    }
}

/// Skeleton before ids are assigned.
enum Draft {
    And(Vec<Draft>),
    Or(Vec<Draft>),
    Leaf(LinearConstraint),
    Const(bool),
}

/// Canonicalizes every atom, folds constants, and numbers predicates and
/// instances left to right.
pub fn encode(normalized: &Formula) -> (PredicateTable, BooleanSkeleton) {
    let mut table = PredicateTable::default();
    let draft = fold(&normalized.root, &mut table);
    let mut path = Vec::new();
    let skeleton = assign(draft, &mut table, &mut path);
    table.originals = table.constraints.len();
    (table, skeleton)
}

fn fold(node: &FormulaAst, table: &mut PredicateTable) -> Draft {
    match node {
        FormulaAst::And(cs) | FormulaAst::Or(cs) => {
            let conj = matches!(node, FormulaAst::And(_));
            let mut kids: Vec<Draft> = Vec::new();
            for c in cs {
                match fold(c, table) {
                    // Absorbing constant decides the node; the neutral one vanishes.
                    Draft::Const(b) if b != conj => return Draft::Const(b),
                    Draft::Const(_) => {}
                    Draft::And(gs) if conj => kids.extend(gs),
                    Draft::Or(gs) if !conj => kids.extend(gs),
                    Draft::Leaf(l) => {
                        let dup = kids.iter().any(|k| matches!(k, Draft::Leaf(m) if *m == l));
                        if !dup {
                            kids.push(Draft::Leaf(l));
                        }
                    }
                    other => kids.push(other),
                }
            }
            match kids.len() {
                0 => Draft::Const(conj),
                1 => kids.pop().unwrap(),
                _ if conj => Draft::And(kids),
                _ => Draft::Or(kids),
            }
        }
        FormulaAst::Atom(a) => {
            let c = a
                .to_constraint()
                .expect("encode expects a normalized formula (only <= and < atoms)");
            match c.canonicalize() {
                CanonResult::Canonical(k) => Draft::Leaf(k),
                CanonResult::Tautology => {
                    table.folded_true += 1;
                    Draft::Const(true)
                }
                CanonResult::Contradiction => {
                    table.folded_false += 1;
                    Draft::Const(false)
                }
            }
        }
        FormulaAst::Not(_) => panic!("encode expects a normalized formula (no negations)"),
    }
}

fn assign(draft: Draft, table: &mut PredicateTable, path: &mut Vec<u32>) -> BooleanSkeleton {
    let children = |cs: Vec<Draft>, table: &mut PredicateTable, path: &mut Vec<u32>| {
        cs.into_iter()
            .enumerate()
            .map(|(i, c)| {
                path.push(i as u32);
                let node = assign(c, table, path);
                path.pop();
                node
            })
            .collect()
    };
    match draft {
        Draft::And(cs) => BooleanSkeleton::And(children(cs, table, path)),
        Draft::Or(cs) => BooleanSkeleton::Or(children(cs, table, path)),
        Draft::Leaf(c) => {
            let (pred, _) = table.intern(c);
            let inst = InstId(table.instances.len() as u32);
            table.instances.push(Instance { pred, path: path.clone() });
            BooleanSkeleton::Leaf { pred, inst }
        }
        Draft::Const(b) => BooleanSkeleton::Const(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::{Point, VarId};
    use crate::parser::parse;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn norm(text: &str) -> String {
        normalize(&parse(text).unwrap()).render()
    }

    fn has_not(node: &FormulaAst) -> bool {
        match node {
            FormulaAst::And(cs) | FormulaAst::Or(cs) => cs.iter().any(has_not),
            FormulaAst::Not(_) => true,
            FormulaAst::Atom(a) => !matches!(a.op, RelOp::Le | RelOp::Lt),
        }
    }

    #[test]
    fn equality_becomes_two_inequalities() {
        assert_eq!(norm("x1 = 3"), "x1 <= 3 & -x1 <= -3");
    }

    #[test]
    fn negated_inequality_is_reversed() {
        assert_eq!(norm("!(x1 <= 3)"), "-x1 < -3");
        assert_eq!(norm("!(x1 < 3)"), "-x1 <= -3");
    }

    #[test]
    fn de_morgan() {
        assert_eq!(
            norm("!(a <= 1 & (b <= 2 | c <= 3))"),
            "-a < -1 | -b < -2 & -c < -3"
        );
    }

    #[test]
    fn disequality_splits_strictly() {
        assert_eq!(norm("x1 != 3"), "x1 < 3 | -x1 < -3");
        assert_eq!(norm("!(x1 = 3)"), "x1 < 3 | -x1 < -3");
        assert_eq!(norm("!(x1 != 3)"), "x1 <= 3 & -x1 <= -3");
    }

    #[test]
    fn encodes_left_to_right() {
        let f = parse("2x1 - x2 <= 0 & (2x2 - 4x3 <= 0 | x3 - x1 <= -1)").unwrap();
        let (table, skel) = encode(&normalize(&f));
        assert_eq!(skel.render(), "e1 & (e2 | e3)");
        assert_eq!(table.num_original(), 3);
        assert_eq!(table.num_instances(), 3);
        let names = &f.vars;
        let shown: Vec<String> = table
            .constraints()
            .iter()
            .map(|c| c.display_with(names).to_string())
            .collect();
        assert_eq!(shown, ["x1 - 1/2*x2 <= 0", "x2 - 2x3 <= 0", "-x1 + x3 <= -1"]);
        assert_eq!(table.instances()[2], Instance { pred: PredId(2), path: vec![1, 1] });
    }

    #[test]
    fn scaled_duplicates_share_a_predicate() {
        let (table, skel) = encode(&normalize(&parse("x1 <= 0 | 2x1 <= 0").unwrap()));
        assert_eq!(table.len(), 1);
        assert_eq!(skel, BooleanSkeleton::Leaf { pred: PredId(0), inst: InstId(0) });
    }

    #[test]
    fn repeated_predicates_share_ids_across_branches() {
        let (table, skel) =
            encode(&normalize(&parse("x <= 0 & (y <= 0 | z <= 0) | (y <= 0 & z <= 0)").unwrap()));
        assert_eq!(skel.render(), "e1 & (e2 | e3) | e2 & e3");
        assert_eq!(table.num_original(), 3);
        assert_eq!(table.num_instances(), 5);
    }

    #[test]
    fn constants_fold_away() {
        let (table, skel) = encode(&normalize(&parse("0 <= 1 & x1 <= 0").unwrap()));
        assert_eq!(skel, BooleanSkeleton::Leaf { pred: PredId(0), inst: InstId(0) });
        assert_eq!(table.folded_constants(), (1, 0));
        let (_, skel) = encode(&normalize(&parse("1 <= 0 & x1 <= 0").unwrap()));
        assert_eq!(skel, BooleanSkeleton::Const(false));
        let (table, skel) = encode(&normalize(&parse("1 <= 0 | x1 - x1 < 1").unwrap()));
        assert_eq!(skel, BooleanSkeleton::Const(true));
        assert!(table.is_empty());
        // folding an Or down to a conjunction keeps the tree flat
        let (_, skel) = encode(&normalize(&parse("a <= 0 & (b <= 0 & c <= 0 | 1 <= 0)").unwrap()));
        assert_eq!(skel.render(), "e1 & e2 & e3");
        assert!(matches!(&skel, BooleanSkeleton::And(cs) if cs.len() == 3));
    }

    #[test]
    fn encoding_is_stable() {
        let f = normalize(&parse("x <= 1 & (y < 2 | x + y <= 3) | !(x = y)").unwrap());
        assert_eq!(encode(&f), encode(&f));
    }

    #[test]
    fn split_instances_gives_each_leaf_a_predicate() {
        let (table, skel) =
            encode(&normalize(&parse("x <= 0 & (y <= 0 | z <= 0) | (y <= 0 & z <= 0)").unwrap()));
        let (split, relabelled) = table.split_instances(&skel);
        assert_eq!(split.num_original(), 5);
        assert_eq!(relabelled.render(), "e1 & (e2 | e3) | e4 & e5");
        assert_eq!(split.constraint(PredId(3)), table.constraint(PredId(1)));
    }

    fn arb_atom() -> impl Strategy<Value = String> {
        (
            prop::collection::vec(-3i64..=3, 3),
            prop::sample::select(vec!["<=", "<", ">=", ">", "=", "!="]),
            -3i64..=3,
        )
            .prop_map(|(cs, op, b)| {
                let lhs: Vec<String> = cs
                    .iter()
                    .zip(["x", "y", "z"])
                    .map(|(c, v)| format!("{c}*{v}").replace("*", "").replace("1x", "x"))
                    .collect();
                format!("{} {op} {b}", lhs.join(" + ")).replace("+ -", "- ")
            })
    }

    fn arb_formula() -> impl Strategy<Value = String> {
        arb_atom().prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(|v| format!("({})", v.join(" & "))),
                prop::collection::vec(inner.clone(), 2..4).prop_map(|v| format!("({})", v.join(" | "))),
                inner.prop_map(|f| format!("!({f})")),
            ]
        })
    }

    proptest! {
        #[test]
        fn normalize_preserves_truth(
            text in arb_formula(),
            vals in prop::collection::vec((-4i64..=4, 1i64..=2), 3),
        ) {
            let f = parse(&text).unwrap();
            let n = normalize(&f);
            prop_assert!(!has_not(&n.root));
            prop_assert!(n.root.is_flat());
            let point: Point = (0..f.num_vars())
                .map(|i| (VarId(i as u32), ratio(vals[i].0, vals[i].1)))
                .collect();
            prop_assert_eq!(f.evaluate(&point).unwrap(), n.evaluate(&point).unwrap());
            // the encoded skeleton agrees too
            let (table, skel) = encode(&n);
            let truth = skel.eval(&|p| table.constraint(p).evaluate(&point).unwrap());
            prop_assert_eq!(truth, n.evaluate(&point).unwrap());
        }
    }
}
