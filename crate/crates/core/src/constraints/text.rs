//! Text and JSON forms of constraints.
//!
//! The printer emits `a1*v1 + ... + c <op> 0` atoms joined by `&&` and
//! `||`. The parser accepts that output and also friendlier input such as
//! `t_DS + 2*t_FS <= 3 && (t_PS < 1 || t_FS > 1)`. Identifiers `x0`, `x1`, ...
//! are clocks, `d_f` and `r_f` are the refinement placeholders, and any other
//! identifier is a parameter.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::convex::Constraint;
use super::linear::{fmt_rat, parse_rat, Inequality, LinearTerm, Rat, Rel, Var};
use super::nncc::{Clause, Dnf, Nncc};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("constraint syntax error at offset {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Rel(Rel),
    And,
    Or,
    LParen,
    RParen,
    Plus,
    Minus,
    Star,
    End,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |offset: usize, m: &str| ParseError { offset, message: m.to_string() };
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let two = src.get(i..i + 2).unwrap_or("");
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '*' => {
                i += 1;
                Tok::Star
            }
            '&' if two == "&&" => {
                i += 2;
                Tok::And
            }
            '|' if two == "||" => {
                i += 2;
                Tok::Or
            }
            '<' | '>' | '=' => {
                let sym = if matches!(two, "<=" | ">=" | "==") { two } else { &src[i..i + 1] };
                i += sym.len();
                Tok::Rel(Rel::from_symbol(sym).ok_or_else(|| err(start, "bad relation"))?)
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b'/') {
                    i += 1;
                }
                let lit = &src[start..i];
                Tok::Num(parse_rat(lit).ok_or_else(|| err(start, &format!("bad number `{lit}`")))?)
            }
            c if c.is_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                Tok::Ident(src[start..i].to_string())
            }
            _ => {
                // multi-byte relation symbols
                let rest = &src[i..];
                if let Some(s) = ["≤", "≥"].into_iter().find(|s| rest.starts_with(s)) {
                    i += s.len();
                    Tok::Rel(Rel::from_symbol(s).expect("known symbol"))
                } else if rest.starts_with('∧') {
                    i += '∧'.len_utf8();
                    Tok::And
                } else if rest.starts_with('∨') {
                    i += '∨'.len_utf8();
                    Tok::Or
                } else {
                    return Err(err(start, &format!("unexpected character `{}`", rest.chars().next().unwrap_or(' '))));
                }
            }
        };
        out.push((start, tok));
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

pub fn var_from_name(name: &str) -> Var {
    match name {
        "d_f" => Var::Delay,
        "r_f" => Var::Elapsed,
        _ => {
            if let Some(n) = name.strip_prefix('x') {
                if !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()) {
                    if let Ok(i) = n.parse() {
                        return Var::Clock(i);
                    }
                }
            }
            Var::param(name)
        }
    }
}

enum Formula {
    Atom(Inequality),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    True,
    False,
}

impl Formula {
    fn to_cnf(&self) -> Vec<Clause> {
        match self {
            Formula::Atom(i) => vec![vec![i.clone()]],
            Formula::True => vec![],
            Formula::False => vec![vec![]],
            Formula::And(parts) => parts.iter().flat_map(|p| p.to_cnf()).collect(),
            Formula::Or(parts) => {
                let mut acc: Vec<Clause> = vec![vec![]];
                for p in parts {
                    let cnf = p.to_cnf();
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &cnf {
                            let mut c = a.clone();
                            c.extend(b.iter().cloned());
                            next.push(c);
                        }
                    }
                    acc = next;
                }
                acc
            }
        }
    }

    fn to_dnf(&self) -> Vec<Vec<Inequality>> {
        match self {
            Formula::Atom(i) => vec![vec![i.clone()]],
            Formula::True => vec![vec![]],
            Formula::False => vec![],
            Formula::Or(parts) => parts.iter().flat_map(|p| p.to_dnf()).collect(),
            Formula::And(parts) => {
                let mut acc: Vec<Vec<Inequality>> = vec![vec![]];
                for p in parts {
                    let dnf = p.to_dnf();
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &dnf {
                            let mut c = a.clone();
                            c.extend(b.iter().cloned());
                            next.push(c);
                        }
                    }
                    acc = next;
                }
                acc
            }
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, m: &str) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), message: m.to_string() })
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.conj()?];
        while *self.peek() == Tok::Or {
            self.bump();
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one") } else { Formula::Or(parts) })
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut parts = vec![self.atom()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one") } else { Formula::And(parts) })
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.disj()?;
                if self.bump() != Tok::RParen {
                    return self.fail("expected `)`");
                }
                Ok(f)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            _ => {
                let lhs = self.linear()?;
                let rel = match self.bump() {
                    Tok::Rel(r) => r,
                    _ => return self.fail("expected a relation"),
                };
                let rhs = self.linear()?;
                // chained comparisons such as `0 <= t <= 1`
                if let Tok::Rel(r2) = self.peek().clone() {
                    self.bump();
                    let third = self.linear()?;
                    return Ok(Formula::And(vec![
                        Formula::Atom(Inequality::compare(&lhs, rel, &rhs)),
                        Formula::Atom(Inequality::compare(&rhs, r2, &third)),
                    ]));
                }
                Ok(Formula::Atom(Inequality::compare(&lhs, rel, &rhs)))
            }
        }
    }

    fn linear(&mut self) -> Result<LinearTerm, ParseError> {
        let mut acc = LinearTerm::zero();
        let mut sign = Rat::from_integer(1.into());
        match self.peek() {
            Tok::Minus => {
                self.bump();
                sign = -sign;
            }
            Tok::Plus => {
                self.bump();
            }
            _ => {}
        }
        loop {
            let p = self.product()?;
            acc = acc.plus(&p.scaled(&sign));
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    sign = Rat::from_integer(1.into());
                }
                Tok::Minus => {
                    self.bump();
                    sign = Rat::from_integer((-1).into());
                }
                _ => return Ok(acc),
            }
            // allow `a + -1*b` as printed
            if *self.peek() == Tok::Minus {
                self.bump();
                sign = -sign;
            }
        }
    }

    fn product(&mut self) -> Result<LinearTerm, ParseError> {
        let mut coeff = Rat::from_integer(1.into());
        let mut var: Option<Var> = None;
        loop {
            match self.bump() {
                Tok::Num(n) => coeff *= n,
                Tok::Ident(name) => {
                    if var.is_some() {
                        return self.fail("nonlinear product");
                    }
                    var = Some(var_from_name(&name));
                }
                Tok::Minus => {
                    coeff = -coeff;
                    continue;
                }
                _ => return self.fail("expected a number or identifier"),
            }
            if *self.peek() == Tok::Star {
                self.bump();
            } else {
                break;
            }
        }
        Ok(match var {
            Some(v) => LinearTerm::from_parts([(v, coeff)], Rat::from_integer(0.into())),
            None => LinearTerm::constant(coeff),
        })
    }
}

fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let f = p.disj()?;
    if *p.peek() != Tok::End {
        return p.fail("trailing input");
    }
    Ok(f)
}

pub fn parse_nncc(src: &str) -> Result<Nncc, ParseError> {
    Ok(Nncc::from_clauses(parse_formula(src)?.to_cnf()))
}

pub fn parse_dnf(src: &str) -> Result<Dnf, ParseError> {
    Ok(Dnf::from_terms(parse_formula(src)?.to_dnf().into_iter().map(Constraint::from_conjuncts).collect()))
}

/// A conjunction of atoms.
pub fn parse_constraint(src: &str) -> Result<Constraint, ParseError> {
    let terms = parse_formula(src)?.to_dnf();
    if terms.len() != 1 {
        return Err(ParseError { offset: 0, message: "expected a conjunction of inequalities".into() });
    }
    Ok(Constraint::from_conjuncts(terms.into_iter().next().expect("one")))
}

pub fn parse_linear(src: &str) -> Result<LinearTerm, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let t = p.linear()?;
    if *p.peek() != Tok::End {
        return p.fail("trailing input");
    }
    Ok(t)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct InequalityJson {
    pub coeffs: BTreeMap<String, String>,
    pub constant: String,
    pub rel: String,
}

impl From<&Inequality> for InequalityJson {
    fn from(i: &Inequality) -> Self {
        InequalityJson {
            coeffs: i.term().coeffs().iter().map(|(v, c)| (v.to_string(), fmt_rat(c))).collect(),
            constant: fmt_rat(i.term().constant_part()),
            rel: i.rel().symbol().to_string(),
        }
    }
}

impl TryFrom<&InequalityJson> for Inequality {
    type Error = ParseError;

    fn try_from(j: &InequalityJson) -> Result<Self, ParseError> {
        let bad = |m: String| ParseError { offset: 0, message: m };
        let mut term = LinearTerm::constant(parse_rat(&j.constant).ok_or_else(|| bad(format!("bad constant {}", j.constant)))?);
        for (v, c) in &j.coeffs {
            term.add_coeff(var_from_name(v), parse_rat(c).ok_or_else(|| bad(format!("bad coefficient {c}")))?);
        }
        let rel = Rel::from_symbol(&j.rel).ok_or_else(|| bad(format!("bad relation {}", j.rel)))?;
        Ok(Inequality::new(term, rel))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct NnccJson {
    pub clauses: Vec<Vec<InequalityJson>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DnfJson {
    pub terms: Vec<Vec<InequalityJson>>,
}

impl From<&Nncc> for NnccJson {
    fn from(n: &Nncc) -> Self {
        NnccJson { clauses: n.clauses().iter().map(|cl| cl.iter().map(InequalityJson::from).collect()).collect() }
    }
}

impl TryFrom<&NnccJson> for Nncc {
    type Error = ParseError;

    fn try_from(j: &NnccJson) -> Result<Self, ParseError> {
        let mut clauses = Vec::new();
        for cl in &j.clauses {
            clauses.push(cl.iter().map(Inequality::try_from).collect::<Result<Vec<_>, _>>()?);
        }
        Ok(Nncc::from_clauses(clauses))
    }
}

impl From<&Dnf> for DnfJson {
    fn from(d: &Dnf) -> Self {
        DnfJson { terms: d.terms().iter().map(|t| t.conjuncts().iter().map(InequalityJson::from).collect()).collect() }
    }
}

impl From<&Constraint> for Vec<InequalityJson> {
    fn from(c: &Constraint) -> Self {
        c.conjuncts().iter().map(InequalityJson::from).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::nncc::{equivalent, is_weaker};

    #[test]
    fn printed_form_parses_back() {
        let n = parse_nncc("(t_FS >= 1 && t_PS <= 1) || t_DS + t_PS <= 2").unwrap();
        let printed = n.to_string();
        let back = parse_nncc(&printed).unwrap();
        assert_eq!(n, back, "{printed}");
    }

    #[test]
    fn clocks_and_placeholders() {
        let c = parse_constraint("x0 - x1 = t && r_f <= 3 - d_f").unwrap();
        let vars = c.vars();
        assert!(vars.contains(&Var::Clock(0)));
        assert!(vars.contains(&Var::Delay));
        assert!(vars.contains(&Var::Elapsed));
    }

    #[test]
    fn chained_comparison() {
        let a = parse_nncc("0 <= t <= 1").unwrap();
        let b = parse_nncc("t <= 1").unwrap();
        assert!(equivalent(&a, &b));
    }

    #[test]
    fn json_round_trip() {
        let n = parse_nncc("(t_FS < 1 || 3/2*t_PS >= 2) && t_DS = 1.5").unwrap();
        let j = NnccJson::from(&n);
        let text = serde_json::to_string(&j).unwrap();
        let back: NnccJson = serde_json::from_str(&text).unwrap();
        assert_eq!(Nncc::try_from(&back).unwrap(), n);
    }

    #[test]
    fn errors_carry_offsets() {
        let e = parse_nncc("t <= ").unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(parse_nncc("t * u <= 1").is_err());
        assert!(parse_nncc("t <= 1 )").is_err());
    }

    #[test]
    fn dnf_and_cnf_views_agree() {
        let src = "(a < 1 && b <= 2) || (a > 1 && c <= 1)";
        let d = parse_dnf(src).unwrap();
        let n = parse_nncc(src).unwrap();
        assert!(is_weaker(&d.to_nncc(), &n) && is_weaker(&n, &d.to_nncc()));
    }
}
