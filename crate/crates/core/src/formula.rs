//! Formula syntax trees and their textual rendering.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constraint::{var_name, write_linear, FmError, LinearConstraint, Point, VarId};
use crate::rational::{format_rational, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelOp {
    Le,
    Lt,
    Eq,
    Ne,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Le => "<=",
            RelOp::Lt => "<",
            RelOp::Eq => "=",
            RelOp::Ne => "!=",
        }
    }
}

/// `lhs op rhs` with the left side a linear sum.
///
/// `>=` and `>` never appear here: the parser rewrites them by negating
/// both sides.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    lhs: Vec<(VarId, Rational)>,
    pub op: RelOp,
    pub rhs: Rational,
}

impl Atom {
    pub fn new(lhs: impl IntoIterator<Item = (VarId, Rational)>, op: RelOp, rhs: Rational) -> Self {
        // Reuse the constraint constructor for merging and zero-dropping.
        let tmp = LinearConstraint::le(lhs, Rational::from_integer(0.into()));
        Atom { lhs: tmp.terms().to_vec(), op, rhs }
    }

    pub fn lhs(&self) -> &[(VarId, Rational)] {
        &self.lhs
    }

    /// The atom as a half-space; only meaningful for `<=` and `<`.
    pub fn to_constraint(&self) -> Option<LinearConstraint> {
        let strict = match self.op {
            RelOp::Le => false,
            RelOp::Lt => true,
            _ => return None,
        };
        Some(LinearConstraint::new(self.lhs.iter().cloned(), self.rhs.clone(), strict))
    }

    pub fn evaluate(&self, point: &Point) -> Result<bool, FmError> {
        let lhs = LinearConstraint::le(self.lhs.iter().cloned(), self.rhs.clone()).lhs_value(point)?;
        Ok(match self.op {
            RelOp::Le => lhs <= self.rhs,
            RelOp::Lt => lhs < self.rhs,
            RelOp::Eq => lhs == self.rhs,
            RelOp::Ne => lhs != self.rhs,
        })
    }
}

/// Parse tree of a formula. `And`/`Or` are n-ary with at least two
/// children and never directly nest a node of the same kind.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FormulaAst {
    And(Vec<FormulaAst>),
    Or(Vec<FormulaAst>),
    Not(Box<FormulaAst>),
    Atom(Atom),
}

impl FormulaAst {
    /// Builds a conjunction, splicing nested conjunctions. A single child is
    /// returned unwrapped.
    pub fn and(children: impl IntoIterator<Item = FormulaAst>) -> FormulaAst {
        Self::nary(children, true)
    }

    pub fn or(children: impl IntoIterator<Item = FormulaAst>) -> FormulaAst {
        Self::nary(children, false)
    }

    pub fn not(child: FormulaAst) -> FormulaAst {
        FormulaAst::Not(Box::new(child))
    }

    fn nary(children: impl IntoIterator<Item = FormulaAst>, conj: bool) -> FormulaAst {
        let mut flat = Vec::new();
        for c in children {
            match c {
                FormulaAst::And(cs) if conj => flat.extend(cs),
                FormulaAst::Or(cs) if !conj => flat.extend(cs),
                other => flat.push(other),
            }
        }
        assert!(!flat.is_empty(), "connective without operands");
        if flat.len() == 1 {
            return flat.pop().unwrap();
        }
        if conj {
            FormulaAst::And(flat)
        } else {
            FormulaAst::Or(flat)
        }
    }

    pub fn evaluate(&self, point: &Point) -> Result<bool, FmError> {
        Ok(match self {
            FormulaAst::And(cs) => {
                for c in cs {
                    if !c.evaluate(point)? {
                        return Ok(false);
                    }
                }
                true
            }
            FormulaAst::Or(cs) => {
                for c in cs {
                    if c.evaluate(point)? {
                        return Ok(true);
                    }
                }
                false
            }
            FormulaAst::Not(c) => !c.evaluate(point)?,
            FormulaAst::Atom(a) => a.evaluate(point)?,
        })
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            FormulaAst::And(cs) | FormulaAst::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            FormulaAst::Not(c) => c.collect_atoms(out),
            FormulaAst::Atom(a) => out.push(a),
        }
    }

    /// True when no `And` sits directly under an `And` (same for `Or`) and
    /// every connective has at least two operands.
    pub fn is_flat(&self) -> bool {
        match self {
            FormulaAst::And(cs) => {
                cs.len() >= 2 && cs.iter().all(|c| !matches!(c, FormulaAst::And(_)) && c.is_flat())
            }
            FormulaAst::Or(cs) => {
                cs.len() >= 2 && cs.iter().all(|c| !matches!(c, FormulaAst::Or(_)) && c.is_flat())
            }
            FormulaAst::Not(c) => c.is_flat(),
            FormulaAst::Atom(_) => true,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            FormulaAst::And(cs) | FormulaAst::Or(cs) => {
                1 + cs.iter().map(FormulaAst::height).max().unwrap_or(0)
            }
            FormulaAst::Not(c) => 1 + c.height(),
            FormulaAst::Atom(_) => 0,
        }
    }

    fn map_vars(&self, f: &mut impl FnMut(VarId) -> VarId) -> FormulaAst {
        match self {
            FormulaAst::And(cs) => FormulaAst::And(cs.iter().map(|c| c.map_vars(f)).collect()),
            FormulaAst::Or(cs) => FormulaAst::Or(cs.iter().map(|c| c.map_vars(f)).collect()),
            FormulaAst::Not(c) => FormulaAst::not(c.map_vars(f)),
            FormulaAst::Atom(a) => FormulaAst::Atom(Atom::new(
                a.lhs.iter().map(|(v, q)| (f(*v), q.clone())).collect::<Vec<_>>(),
                a.op,
                a.rhs.clone(),
            )),
        }
    }
}

/// A formula together with its variable names; `vars[i]` names `VarId(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub vars: Vec<String>,
    pub root: FormulaAst,
}

impl Formula {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name).map(|i| VarId(i as u32))
    }

    pub fn evaluate(&self, point: &Point) -> Result<bool, FmError> {
        self.root.evaluate(point)
    }

    /// Reassigns variable ids in order of first appearance in the rendered
    /// text and drops names that no longer occur.
    pub fn renumbered(&self) -> Formula {
        let mut map: HashMap<VarId, VarId> = HashMap::new();
        let mut vars = Vec::new();
        for atom in self.root.atoms() {
            for (v, _) in &atom.lhs {
                map.entry(*v).or_insert_with(|| {
                    vars.push(var_name(&self.vars, *v));
                    VarId(vars.len() as u32 - 1)
                });
            }
        }
        let root = self.root.map_vars(&mut |v| map[&v]);
        Formula { vars, root }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        render_node(&self.root, &self.vars, Prec::Or, &mut out);
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Or,
    And,
    Unary,
}

fn render_node(node: &FormulaAst, names: &[String], ctx: Prec, out: &mut String) {
    let (own, sep, children) = match node {
        FormulaAst::And(cs) => (Prec::And, " & ", cs),
        FormulaAst::Or(cs) => (Prec::Or, " | ", cs),
        FormulaAst::Not(c) => {
            out.push('!');
            match **c {
                FormulaAst::Not(_) => render_node(c, names, Prec::Unary, out),
                _ => {
                    out.push('(');
                    render_node(c, names, Prec::Or, out);
                    out.push(')');
                }
            }
            return;
        }
        FormulaAst::Atom(a) => {
            out.push_str(&write_linear(&a.lhs, |v| var_name(names, v)));
            out.push(' ');
            out.push_str(a.op.symbol());
            out.push(' ');
            out.push_str(&format_rational(&a.rhs));
            return;
        }
    };
    let paren = own < ctx;
    if paren {
        out.push('(');
    }
    for (i, c) in children.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        // A child of the same kind cannot occur, so the next-tighter level suffices.
        let child_ctx = if own == Prec::Or { Prec::And } else { Prec::Unary };
        render_node(c, names, child_ctx, out);
    }
    if paren {
        out.push(')');
    }
}
