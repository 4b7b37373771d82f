//! Recursive-descent parser for the infix formula syntax.
//!
//! ```text
//! formula  := or
//! or       := and ("|" and)*
//! and      := not ("&" not)*
//! not      := "!" not | "(" formula ")" | atom
//! atom     := linexp relop linexp        relop := <= | < | >= | > | = | !=
//! linexp   := ["-"] term (("+" | "-") term)*
//! term     := [rational ["*"]] var | rational
//! rational := integer | integer "/" integer | decimal
//! ```
//!
//! Whitespace is insignificant and `#` starts a comment running to the end
//! of the line. Variables get dense ids in order of first appearance.

use num_traits::Zero;

use crate::constraint::VarId;
use crate::formula::{Atom, Formula, FormulaAst, RelOp};
use crate::rational::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("empty formula")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
    Ne,
    Bang,
    Amp,
    Bar,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    Slash,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Le => "`<=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Bar => "`|`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0, 1, 0);
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        let col = start - line_start + 1;
        if c == '\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let tok = if c.is_ascii_digit() || (c == '.' && next.is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let frac_start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i == frac_start {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        msg: "decimal point must be followed by digits".into(),
                    });
                }
            }
            Tok::Num(chars[start..i].iter().collect())
        } else if c.is_alphabetic() {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            let (tok, len) = match (c, next) {
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('!', Some('=')) => (Tok::Ne, 2),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('=', _) => (Tok::Eq, 1),
                ('!', _) => (Tok::Bang, 1),
                ('&', _) => (Tok::Amp, 1),
                ('|', _) => (Tok::Bar, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                _ => {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            i += len;
            tok
        };
        out.push(Spanned { tok, line, col });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    vars: Vec<String>,
    end: (usize, usize),
}

type Linear = Vec<(VarId, Rational)>;

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.end);
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {}", t.describe())),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn formula(&mut self) -> Result<FormulaAst, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat(&Tok::Bar) {
            parts.push(self.conjunction()?);
        }
        Ok(FormulaAst::or(parts))
    }

    fn conjunction(&mut self) -> Result<FormulaAst, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.eat(&Tok::Amp) {
            parts.push(self.unary()?);
        }
        Ok(FormulaAst::and(parts))
    }

    fn unary(&mut self) -> Result<FormulaAst, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(FormulaAst::not(self.unary()?));
        }
        if self.eat(&Tok::LParen) {
            let inner = self.formula()?;
            if !self.eat(&Tok::RParen) {
                return Err(self.unexpected("`)`"));
            }
            return Ok(inner);
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<FormulaAst, ParseError> {
        let (lhs, lconst) = self.linexp()?;
        let op = match self.peek() {
            Some(Tok::Le) => RelOp::Le,
            Some(Tok::Lt) => RelOp::Lt,
            Some(Tok::Ge) => RelOp::Le,
            Some(Tok::Gt) => RelOp::Lt,
            Some(Tok::Eq) => RelOp::Eq,
            Some(Tok::Ne) => RelOp::Ne,
            _ => return Err(self.unexpected("a relational operator")),
        };
        let flip = matches!(self.peek(), Some(Tok::Ge | Tok::Gt));
        self.pos += 1;
        let (rhs, rconst) = self.linexp()?;
        // Move variables left and constants right: lhs - rhs op rconst - lconst.
        let mut terms: Linear = lhs;
        terms.extend(rhs.into_iter().map(|(v, a)| (v, -a)));
        let mut bound = rconst - lconst;
        if flip {
            terms.iter_mut().for_each(|(_, a)| *a = -a.clone());
            bound = -bound;
        }
        Ok(FormulaAst::Atom(Atom::new(terms, op, bound)))
    }

    /// Returns the variable terms and the summed constant part.
    fn linexp(&mut self) -> Result<(Linear, Rational), ParseError> {
        let mut terms = Vec::new();
        let mut constant = Rational::zero();
        let mut negate = self.eat(&Tok::Minus);
        loop {
            let (var, coeff) = self.term()?;
            let coeff = if negate { -coeff } else { coeff };
            match var {
                Some(v) => terms.push((v, coeff)),
                None => constant += coeff,
            }
            if self.eat(&Tok::Plus) {
                negate = false;
            } else if self.eat(&Tok::Minus) {
                negate = true;
            } else {
                break;
            }
        }
        Ok((terms, constant))
    }

    fn term(&mut self) -> Result<(Option<VarId>, Rational), ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok((Some(self.var(name)), Rational::from_integer(1.into())))
            }
            Some(Tok::Num(_)) => {
                let q = self.rational()?;
                let starred = self.eat(&Tok::Star);
                match self.peek().cloned() {
                    Some(Tok::Ident(name)) => {
                        self.pos += 1;
                        Ok((Some(self.var(name)), q))
                    }
                    _ if starred => Err(self.unexpected("a variable after `*`")),
                    _ => Ok((None, q)),
                }
            }
            _ => Err(self.unexpected("a number or variable")),
        }
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        let Some(Tok::Num(num)) = self.peek().cloned() else {
            return Err(self.unexpected("a number"));
        };
        self.pos += 1;
        let mut text = num;
        if self.eat(&Tok::Slash) {
            let Some(Tok::Num(den)) = self.peek().cloned() else {
                return Err(self.unexpected("a denominator"));
            };
            if text.contains('.') || den.contains('.') {
                return Err(self.error("fractions take integer parts"));
            }
            text = format!("{text}/{den}");
            self.pos += 1;
        }
        parse_rational(&text).map_err(|e| {
            self.pos -= 1;
            self.error(e.to_string())
        })
    }

    fn var(&mut self, name: String) -> VarId {
        match self.vars.iter().position(|v| *v == name) {
            Some(i) => VarId(i as u32),
            None => {
                self.vars.push(name);
                VarId(self.vars.len() as u32 - 1)
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let end = {
        let lines: Vec<&str> = text.split('\n').collect();
        (lines.len(), lines.last().map_or(0, |l| l.chars().count()) + 1)
    };
    let mut p = Parser { toks, pos: 0, vars: Vec::new(), end };
    let root = p.formula()?;
    if p.pos < p.toks.len() {
        return Err(p.unexpected("`&`, `|` or end of input"));
    }
    Ok(Formula { vars: p.vars, root })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn atom(f: &FormulaAst) -> &Atom {
        match f {
            FormulaAst::Atom(a) => a,
            other => panic!("expected atom, got {other:?}"),
        }
    }

    #[test]
    fn conjunction_over_disjunction() {
        let f = parse("2x1 - x2 <= 0 & (2x2 - 4x3 <= 0 | x3 - x1 <= -1)").unwrap();
        assert_eq!(f.vars, ["x1", "x2", "x3"]);
        let FormulaAst::And(cs) = &f.root else { panic!() };
        assert_eq!(cs.len(), 2);
        assert_eq!(atom(&cs[0]).lhs(), &[(VarId(0), int(2)), (VarId(1), int(-1))]);
        let FormulaAst::Or(ds) = &cs[1] else { panic!() };
        let last = atom(&ds[1]);
        assert_eq!(last.lhs(), &[(VarId(0), int(-1)), (VarId(2), int(1))]);
        assert_eq!(last.rhs, int(-1));
    }

    #[test]
    fn single_atom() {
        let f = parse("x1 <= 0").unwrap();
        assert_eq!(atom(&f.root).op, RelOp::Le);
        assert_eq!(f.render(), "x1 <= 0");
    }

    #[test]
    fn negated_equality() {
        let f = parse("!(x1 = 3)").unwrap();
        let FormulaAst::Not(inner) = &f.root else { panic!() };
        assert_eq!(atom(inner).op, RelOp::Eq);
        assert_eq!(atom(inner).rhs, int(3));
    }

    #[test]
    fn precedence_and_flattening() {
        let f = parse("a <= 1 | b <= 2 & c <= 3 | (d <= 4 | e <= 5)").unwrap();
        let FormulaAst::Or(cs) = &f.root else { panic!() };
        assert_eq!(cs.len(), 4);
        assert!(matches!(cs[1], FormulaAst::And(_)));
        assert!(f.root.is_flat());
        let g = parse("(a <= 1 & b <= 1) & c <= 1").unwrap();
        let FormulaAst::And(cs) = &g.root else { panic!() };
        assert_eq!(cs.len(), 3);
    }

    #[test]
    fn greater_than_is_rewritten() {
        let f = parse("x - 2y >= 3").unwrap();
        let a = atom(&f.root);
        assert_eq!(a.op, RelOp::Le);
        assert_eq!(a.lhs(), &[(VarId(0), int(-1)), (VarId(1), int(2))]);
        assert_eq!(a.rhs, int(-3));
        let f = parse("x > 1/2").unwrap();
        assert_eq!(atom(&f.root).op, RelOp::Lt);
        assert_eq!(atom(&f.root).rhs, ratio(-1, 2));
    }

    #[test]
    fn coefficients_constants_and_comments() {
        let f = parse("# header\n1/2*x + 0.25y - 3 + x <= 2 # trailing\n").unwrap();
        let a = atom(&f.root);
        assert_eq!(a.lhs(), &[(VarId(0), ratio(3, 2)), (VarId(1), ratio(1, 4))]);
        assert_eq!(a.rhs, int(5));
    }

    #[test]
    fn variables_on_both_sides() {
        let f = parse("x <= y + 1").unwrap();
        let a = atom(&f.root);
        assert_eq!(a.lhs(), &[(VarId(0), int(1)), (VarId(1), int(-1))]);
        assert_eq!(a.rhs, int(1));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse("   # only a comment\n"), Err(ParseError::Empty));
        assert_eq!(
            parse("x <= 1 &\n  y <= "),
            Err(ParseError::Syntax {
                line: 2,
                col: 8,
                msg: "expected a number or variable, found end of input".into()
            })
        );
        match parse("x <= 1 $") {
            Err(ParseError::Syntax { line: 1, col: 8, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("(x <= 1") {
            Err(ParseError::Syntax { msg, .. }) => assert!(msg.contains("`)`")),
            other => panic!("{other:?}"),
        }
        assert!(parse("x 1 <= 2").is_err());
        assert!(parse("x <= 1/0").is_err());
        assert!(parse("2* <= 1").is_err());
    }

    #[test]
    fn render_minimal_parentheses() {
        for text in [
            "x1 <= 0 & (x2 <= 1 | x3 < 2)",
            "x1 <= 0 | x2 <= 1 & x3 < 2",
            "!(x1 = 3) & !!(x2 != -1/2)",
            "!(x1 <= 0 | x2 <= 0)",
            "-x1 + 1/2*x2 - 3x3 <= 7",
            "0 <= 1",
        ] {
            let f = parse(text).unwrap();
            assert_eq!(f.render(), text);
            assert_eq!(parse(&f.render()).unwrap(), f);
        }
    }
}
