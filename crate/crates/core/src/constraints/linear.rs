//! Variables, linear terms and single inequalities over exact rationals.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

/// Build a rational from a small integer.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Build the rational `n/d`. Panics if `d == 0`.
pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Variable kinds. Clocks and parameters come from the model; `Delay` and
/// `Elapsed` are the two free placeholders used by runtime refinement; `Aux`
/// is reserved for temporaries introduced inside a single operation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Clock(u32),
    Param(Arc<str>),
    Delay,
    Elapsed,
    Aux(u32),
}

impl Var {
    pub fn param(name: &str) -> Var {
        Var::Param(Arc::from(name))
    }

    pub fn is_clock(&self) -> bool {
        matches!(self, Var::Clock(_))
    }

    pub fn is_param(&self) -> bool {
        matches!(self, Var::Param(_))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Clock(i) => write!(f, "x{i}"),
            Var::Param(p) => f.write_str(p),
            Var::Delay => f.write_str("d_f"),
            Var::Elapsed => f.write_str("r_f"),
            Var::Aux(i) => write!(f, "_aux{i}"),
        }
    }
}

/// `sum(coeff * var) + constant`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearTerm {
    coeffs: BTreeMap<Var, Rat>,
    constant: Rat,
}

impl LinearTerm {
    pub fn zero() -> Self {
        LinearTerm::default()
    }

    pub fn constant(c: Rat) -> Self {
        LinearTerm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        let mut t = LinearTerm::zero();
        t.add_coeff(v, Rat::one());
        t
    }

    pub fn from_parts(coeffs: impl IntoIterator<Item = (Var, Rat)>, constant: Rat) -> Self {
        let mut t = LinearTerm::constant(constant);
        for (v, c) in coeffs {
            t.add_coeff(v, c);
        }
        t
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, Rat> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &Rat {
        &self.constant
    }

    pub fn coeff(&self, v: &Var) -> Rat {
        self.coeffs.get(v).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_ground(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn add_coeff(&mut self, v: Var, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.coeffs.entry(v) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_constant(&mut self, c: &Rat) {
        self.constant += c;
    }

    pub fn plus(&self, other: &LinearTerm) -> LinearTerm {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            out.add_coeff(v.clone(), c.clone());
        }
        out.constant += &other.constant;
        out
    }

    pub fn minus(&self, other: &LinearTerm) -> LinearTerm {
        self.plus(&other.scaled(&-Rat::one()))
    }

    pub fn scaled(&self, k: &Rat) -> LinearTerm {
        if k.is_zero() {
            return LinearTerm::zero();
        }
        LinearTerm {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn negated(&self) -> LinearTerm {
        self.scaled(&-Rat::one())
    }

    /// Replace `v` by `by`.
    pub fn substitute(&self, v: &Var, by: &LinearTerm) -> LinearTerm {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => {
                let c = c.clone();
                let mut rest = self.clone();
                rest.coeffs.remove(v);
                rest.plus(&by.scaled(&c))
            }
        }
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> LinearTerm {
        let mut out = LinearTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            out.add_coeff(f(v), c.clone());
        }
        out
    }

    /// Evaluate under a total assignment; `None` if some variable is unbound.
    pub fn eval(&self, env: &impl Fn(&Var) -> Option<Rat>) -> Option<Rat> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * env(v)?;
        }
        Some(acc)
    }

    /// True when every coefficient and the constant are nonnegative.
    pub fn is_nonneg(&self) -> bool {
        !self.constant.is_negative() && self.coeffs.values().all(|c| c.is_positive())
    }
}

impl fmt::Display for LinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_sum(self.coeffs.iter().map(|(v, c)| (v, c.clone())), &self.constant))
    }
}

/// `2*a - b + 1/2` style rendering; `0` when empty.
fn fmt_sum<'a>(coeffs: impl Iterator<Item = (&'a Var, Rat)>, constant: &Rat) -> String {
    let mut out = String::new();
    let mut push = |neg: bool, body: String| {
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        out.push_str(&body);
    };
    for (v, c) in coeffs {
        let mag = c.abs();
        let body = if mag.is_one() { v.to_string() } else { format!("{}*{}", fmt_rat(&mag), v) };
        push(c.is_negative(), body);
    }
    if !constant.is_zero() {
        push(constant.is_negative(), fmt_rat(&constant.abs()));
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// `num/den` in lowest terms; the denominator is omitted when it is 1.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse `a`, `-a`, `a/b` or a finite decimal such as `1.25` exactly.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let r = Rat::new(numer, denom);
    Some(if neg { -r } else { r })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Rel> {
        Some(match s {
            "<" => Rel::Lt,
            "<=" | "≤" => Rel::Le,
            "=" | "==" => Rel::Eq,
            ">=" | "≥" => Rel::Ge,
            ">" => Rel::Gt,
            _ => return None,
        })
    }

    fn holds(self, v: &Rat) -> bool {
        match self {
            Rel::Lt => v.is_negative(),
            Rel::Le => !v.is_positive(),
            Rel::Eq => v.is_zero(),
            Rel::Ge => !v.is_negative(),
            Rel::Gt => v.is_positive(),
        }
    }
}

/// `term rel 0`, kept in a canonical shape: the relation is one of `<`, `<=`,
/// `=`, and the term is scaled so its first coefficient has magnitude one
/// (positive for equalities). Ground inequalities keep a constant in
/// {-1, 0, 1}.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Inequality {
    term: LinearTerm,
    rel: Rel,
}

impl Inequality {
    pub fn new(term: LinearTerm, rel: Rel) -> Inequality {
        let (term, rel) = match rel {
            Rel::Ge => (term.negated(), Rel::Le),
            Rel::Gt => (term.negated(), Rel::Lt),
            r => (term, r),
        };
        let scale = match term.coeffs.values().next() {
            Some(c) => {
                let mag = c.abs();
                if rel == Rel::Eq && c.is_negative() {
                    -mag
                } else {
                    mag
                }
            }
            None => {
                let c = &term.constant;
                if c.is_zero() {
                    Rat::one()
                } else {
                    c.abs()
                }
            }
        };
        let term = if scale.is_one() { term } else { term.scaled(&scale.recip()) };
        Inequality { term, rel }
    }

    /// `lhs rel rhs`
    pub fn compare(lhs: &LinearTerm, rel: Rel, rhs: &LinearTerm) -> Inequality {
        Inequality::new(lhs.minus(rhs), rel)
    }

    pub fn always_false() -> Inequality {
        Inequality { term: LinearTerm::zero(), rel: Rel::Lt }
    }

    pub fn always_true() -> Inequality {
        Inequality { term: LinearTerm::zero(), rel: Rel::Le }
    }

    pub fn term(&self) -> &LinearTerm {
        &self.term
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn is_strict(&self) -> bool {
        self.rel == Rel::Lt
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.term.vars()
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.term.coeffs.contains_key(v)
    }

    pub fn ground_value(&self) -> Option<bool> {
        if self.term.is_ground() {
            Some(self.rel.holds(&self.term.constant))
        } else {
            None
        }
    }

    /// Decided by the nonnegativity of every variable alone, if possible.
    /// `Some(true)`: holds for all nonnegative points; `Some(false)`: holds
    /// for none.
    pub fn trivial_under_nonneg(&self) -> Option<bool> {
        if let Some(b) = self.ground_value() {
            return Some(b);
        }
        let c = &self.term.constant;
        let all_nonpos = self.term.coeffs.values().all(|a| a.is_negative());
        let all_nonneg = self.term.coeffs.values().all(|a| a.is_positive());
        match self.rel {
            Rel::Le => {
                if all_nonpos && !c.is_positive() {
                    return Some(true);
                }
                if all_nonneg && c.is_positive() {
                    return Some(false);
                }
            }
            Rel::Lt => {
                if all_nonpos && c.is_negative() {
                    return Some(true);
                }
                if all_nonneg && !c.is_negative() {
                    return Some(false);
                }
            }
            Rel::Eq => {
                if (all_nonneg && c.is_positive()) || (all_nonpos && c.is_negative()) {
                    return Some(false);
                }
            }
            _ => unreachable!("canonical relation"),
        }
        None
    }

    /// Disjunction equivalent to the negation.
    pub fn negate(&self) -> Vec<Inequality> {
        match self.rel {
            Rel::Lt => vec![Inequality::new(self.term.clone(), Rel::Ge)],
            Rel::Le => vec![Inequality::new(self.term.clone(), Rel::Gt)],
            Rel::Eq => vec![
                Inequality::new(self.term.clone(), Rel::Lt),
                Inequality::new(self.term.clone(), Rel::Gt),
            ],
            _ => unreachable!("canonical relation"),
        }
    }

    pub fn substitute(&self, v: &Var, by: &LinearTerm) -> Inequality {
        if !self.mentions(v) {
            return self.clone();
        }
        Inequality::new(self.term.substitute(v, by), self.rel)
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> Inequality {
        Inequality::new(self.term.rename(f), self.rel)
    }

    pub fn eval(&self, env: &impl Fn(&Var) -> Option<Rat>) -> Option<bool> {
        Some(self.rel.holds(&self.term.eval(env)?))
    }

    /// The coefficient vector normalized to a positive leading entry, plus
    /// the sign applied (+1 or -1). Inequalities sharing a key constrain the
    /// same direction.
    pub(crate) fn direction(&self) -> (BTreeMap<Var, Rat>, bool) {
        let flip = self.term.coeffs.values().next().is_some_and(|c| c.is_negative());
        if flip {
            (self.term.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(), true)
        } else {
            (self.term.coeffs.clone(), false)
        }
    }
}

impl fmt::Display for Inequality {
    /// Positive coefficients on the left, the rest and the constant on the
    /// right: `t_DS + t_FS <= 3`, `t_FS > 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // clear coefficient denominators for display
        let l = self.term.coeffs.values().fold(num_bigint::BigInt::one(), |acc, c| num_integer::Integer::lcm(&acc, c.denom()));
        let term = self.term.scaled(&Rat::from_integer(l));
        let pos: Vec<(&Var, Rat)> = term.coeffs.iter().filter(|(_, c)| c.is_positive()).map(|(v, c)| (v, c.clone())).collect();
        let neg: Vec<(&Var, Rat)> = term.coeffs.iter().filter(|(_, c)| c.is_negative()).map(|(v, c)| (v, -c)).collect();
        let k = -&term.constant;
        if pos.is_empty() && !neg.is_empty() {
            let flipped = match self.rel {
                Rel::Lt => Rel::Gt,
                Rel::Le => Rel::Ge,
                r => r,
            };
            let lhs = fmt_sum(neg.into_iter(), &Rat::zero());
            return write!(f, "{lhs} {} {}", flipped.symbol(), fmt_sum(std::iter::empty(), &-k));
        }
        let lhs = fmt_sum(pos.into_iter(), &Rat::zero());
        let rhs = fmt_sum(neg.into_iter(), &k);
        write!(f, "{lhs} {} {rhs}", self.rel.symbol())
    }
}
