//! Linear constraints over exact rationals and the single-pair
//! Fourier-Motzkin resolution step.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rational, Rational};

/// Index of a real-valued variable. Indices are dense in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// An assignment of rational values to variables.
pub type Point = BTreeMap<VarId, Rational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FmError {
    #[error("point assigns no value to variable {0}")]
    MissingVariable(VarId),
    #[error("variable {var} must occur with opposite signs in both constraints")]
    SignPrecondition { var: VarId },
}

/// `Σ a_j·x_j ≤ b` (or `<` when `strict`).
///
/// Terms are kept sorted by variable with no zero coefficients, so two
/// constraints compare equal exactly when they are syntactically identical.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearConstraint {
    terms: Vec<(VarId, Rational)>,
    bound: Rational,
    strict: bool,
}

/// Outcome of bringing a constraint into canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CanonResult {
    Canonical(LinearConstraint),
    Tautology,
    Contradiction,
}

impl CanonResult {
    pub fn canonical(self) -> Option<LinearConstraint> {
        match self {
            CanonResult::Canonical(c) => Some(c),
            _ => None,
        }
    }
}

impl LinearConstraint {
    /// Builds a constraint, summing repeated variables and dropping zeros.
    pub fn new(
        terms: impl IntoIterator<Item = (VarId, Rational)>,
        bound: Rational,
        strict: bool,
    ) -> Self {
        let mut acc: BTreeMap<VarId, Rational> = BTreeMap::new();
        for (v, a) in terms {
            *acc.entry(v).or_insert_with(Rational::zero) += a;
        }
        let terms = acc.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        LinearConstraint { terms, bound, strict }
    }

    pub fn le(terms: impl IntoIterator<Item = (VarId, Rational)>, bound: Rational) -> Self {
        Self::new(terms, bound, false)
    }

    pub fn lt(terms: impl IntoIterator<Item = (VarId, Rational)>, bound: Rational) -> Self {
        Self::new(terms, bound, true)
    }

    pub fn terms(&self) -> &[(VarId, Rational)] {
        &self.terms
    }

    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: VarId) -> Option<&Rational> {
        self.terms
            .binary_search_by(|(w, _)| w.cmp(&v))
            .ok()
            .map(|i| &self.terms[i].1)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.iter().map(|(v, _)| *v)
    }

    /// Divides through by the magnitude of the lowest-index coefficient.
    /// Constant constraints are decided on the spot.
    pub fn canonicalize(&self) -> CanonResult {
        let Some((_, lead)) = self.terms.first() else {
            let holds = if self.strict {
                self.bound.is_positive()
            } else {
                !self.bound.is_negative()
            };
            return if holds {
                CanonResult::Tautology
            } else {
                CanonResult::Contradiction
            };
        };
        let scale = lead.abs();
        if scale.is_one() {
            return CanonResult::Canonical(self.clone());
        }
        CanonResult::Canonical(LinearConstraint {
            terms: self.terms.iter().map(|(v, a)| (*v, a / &scale)).collect(),
            bound: &self.bound / &scale,
            strict: self.strict,
        })
    }

    pub fn lhs_value(&self, point: &Point) -> Result<Rational, FmError> {
        let mut sum = Rational::zero();
        for (v, a) in &self.terms {
            let x = point.get(v).ok_or(FmError::MissingVariable(*v))?;
            sum += a * x;
        }
        Ok(sum)
    }

    pub fn evaluate(&self, point: &Point) -> Result<bool, FmError> {
        let lhs = self.lhs_value(point)?;
        Ok(if self.strict {
            lhs < self.bound
        } else {
            lhs <= self.bound
        })
    }

    /// The complement half-space: `¬(a·x ≤ b)` is `-a·x < -b` and
    /// `¬(a·x < b)` is `-a·x ≤ -b`.
    pub fn negated(&self) -> LinearConstraint {
        LinearConstraint {
            terms: self.terms.iter().map(|(v, a)| (*v, -a)).collect(),
            bound: -&self.bound,
            strict: !self.strict,
        }
    }

    /// `a·x ≤ b` becomes `k·a·x ≤ k·b` for `k > 0`.
    fn scaled(&self, k: &Rational) -> impl Iterator<Item = (VarId, Rational)> + '_ {
        let k = k.clone();
        self.terms.iter().map(move |(v, a)| (*v, a * &k))
    }

    /// True when both describe the same half-space (equal up to positive scaling).
    pub fn same_half_space(&self, other: &LinearConstraint) -> bool {
        self.canonicalize() == other.canonicalize()
    }

    /// Renders the constraint using the given variable names, e.g. `x1 - 2x2 <= 3`.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        DisplayWith { c: self, names }
    }
}

struct DisplayWith<'a> {
    c: &'a LinearConstraint,
    names: &'a [String],
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.c.strict { "<" } else { "<=" };
        write!(
            f,
            "{} {} {}",
            write_linear(&self.c.terms, |v| var_name(self.names, v)),
            op,
            format_rational(&self.c.bound)
        )
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.display_with(&[]).fmt(f)
    }
}

pub(crate) fn var_name(names: &[String], v: VarId) -> String {
    names
        .get(v.index())
        .cloned()
        .unwrap_or_else(|| format!("v{}", v.0))
}

/// `2x1 - x2 + 1/2*x3`; an empty sum renders as `0`.
pub(crate) fn write_linear(
    terms: &[(VarId, Rational)],
    mut name: impl FnMut(VarId) -> String,
) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (v, a)) in terms.iter().enumerate() {
        let mag = a.abs();
        if i == 0 {
            if a.is_negative() {
                out.push('-');
            }
        } else if a.is_negative() {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if !mag.is_one() {
            out.push_str(&format_rational(&mag));
            if !mag.is_integer() {
                out.push('*');
            }
        }
        out.push_str(&name(*v));
    }
    out
}

/// Eliminates `v` from a pair of constraints bounding it from opposite sides.
///
/// Either argument may carry the positive coefficient; the pair only has to
/// disagree in sign on `v`. The resolvent is strict iff an input is strict.
pub fn resolve(
    upper: &LinearConstraint,
    lower: &LinearConstraint,
    v: VarId,
) -> Result<CanonResult, FmError> {
    let sign_err = FmError::SignPrecondition { var: v };
    let cu = upper.coeff(v).ok_or_else(|| sign_err.clone())?;
    let cl = lower.coeff(v).ok_or_else(|| sign_err.clone())?;
    let (up, lo, cu, cl) = match (cu.is_positive(), cl.is_positive()) {
        (true, false) => (upper, lower, cu.clone(), -cl),
        (false, true) => (lower, upper, cl.clone(), -cu),
        _ => return Err(sign_err),
    };
    let terms = merge_sum(up.scaled(&cl), lo.scaled(&cu));
    debug_assert!(terms.iter().all(|(w, _)| *w != v));
    let resolvent = LinearConstraint {
        terms,
        bound: &up.bound * &cl + &lo.bound * &cu,
        strict: up.strict || lo.strict,
    };
    Ok(resolvent.canonicalize())
}

/// Merges two sorted term lists, summing shared variables and dropping zeros.
fn merge_sum(
    a: impl Iterator<Item = (VarId, Rational)>,
    b: impl Iterator<Item = (VarId, Rational)>,
) -> Vec<(VarId, Rational)> {
    let mut out = Vec::new();
    let mut a = a.peekable();
    let mut b = b.peekable();
    loop {
        let next = match (a.peek(), b.peek()) {
            (None, None) => break,
            (Some(_), None) => a.next().unwrap(),
            (None, Some(_)) => b.next().unwrap(),
            (Some((va, _)), Some((vb, _))) => match va.cmp(vb) {
                Ordering::Less => a.next().unwrap(),
                Ordering::Greater => b.next().unwrap(),
                Ordering::Equal => {
                    let (v, x) = a.next().unwrap();
                    let (_, y) = b.next().unwrap();
                    (v, x + y)
                }
            },
        };
        if !next.1.is_zero() {
            out.push(next);
        }
    }
    out
}
