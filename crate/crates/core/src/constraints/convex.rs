//! Convex constraints (conjunctions of inequalities) and Fourier–Motzkin
//! elimination.
//!
//! Every variable is nonnegative: parameters are response times and clocks
//! measure elapsed time. Elimination and satisfiability therefore treat
//! `v >= 0` as an implicit axiom for every variable involved.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};

use super::linear::{Inequality, LinearTerm, Rat, Rel, Var};
use super::nncc::Nncc;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    conjuncts: Vec<Inequality>,
}

impl Constraint {
    pub fn top() -> Constraint {
        Constraint::default()
    }

    pub fn bottom() -> Constraint {
        Constraint { conjuncts: vec![Inequality::always_false()] }
    }

    pub fn from_conjuncts(conjuncts: impl IntoIterator<Item = Inequality>) -> Constraint {
        let mut c = Constraint::top();
        for i in conjuncts {
            c.push(i);
        }
        c
    }

    pub fn single(i: Inequality) -> Constraint {
        Constraint { conjuncts: vec![i] }
    }

    pub fn conjuncts(&self) -> &[Inequality] {
        &self.conjuncts
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Syntactically `true`.
    pub fn is_top(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// Contains a ground contradiction such as `0 < 0`.
    pub fn is_bottom(&self) -> bool {
        self.conjuncts.iter().any(|i| i.ground_value() == Some(false))
    }

    /// Append unless already present.
    pub fn push(&mut self, i: Inequality) {
        if !self.conjuncts.contains(&i) {
            self.conjuncts.push(i);
        }
    }

    /// Conjunct concatenation with duplicates removed.
    pub fn and(&self, other: &Constraint) -> Constraint {
        let mut out = self.clone();
        for i in &other.conjuncts {
            out.push(i.clone());
        }
        out
    }

    pub fn with(&self, i: Inequality) -> Constraint {
        let mut out = self.clone();
        out.push(i);
        out
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.conjuncts.iter().flat_map(|i| i.vars().cloned()).collect()
    }

    pub fn clocks(&self) -> BTreeSet<u32> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Clock(i) => Some(i),
                _ => None,
            })
            .collect()
    }

    pub fn substitute(&self, v: &Var, by: &LinearTerm) -> Constraint {
        Constraint::from_conjuncts(self.conjuncts.iter().map(|i| i.substitute(v, by)))
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> Constraint {
        Constraint::from_conjuncts(self.conjuncts.iter().map(|i| i.rename(f)))
    }

    pub fn eval(&self, env: &impl Fn(&Var) -> Option<Rat>) -> Option<bool> {
        let mut all = true;
        for i in &self.conjuncts {
            all &= i.eval(env)?;
        }
        Some(all)
    }

    /// Cheap syntactic normalization: drops conjuncts decided by
    /// nonnegativity, keeps the tightest bound per direction, merges matching
    /// lower/upper bounds into equalities and sorts. Returns `bottom()` when a
    /// contradiction is visible without elimination.
    pub fn tidy(&self) -> Constraint {
        tidy(self.conjuncts.iter().cloned())
    }

    /// Exact projection of `self ∧ (eliminated vars >= 0)` onto the remaining
    /// variables.
    pub fn eliminate(&self, vars: &BTreeSet<Var>) -> Constraint {
        let mut cur = self.tidy();
        let mut todo: BTreeSet<Var> = vars.intersection(&cur.vars()).cloned().collect();
        while !todo.is_empty() {
            if cur.is_bottom() {
                return Constraint::bottom();
            }
            let v = pick_var(&cur.conjuncts, &todo);
            todo.remove(&v);
            cur = tidy(eliminate_one(std::mem::take(&mut cur.conjuncts), &v));
            todo = todo.intersection(&cur.vars()).cloned().collect();
        }
        cur
    }

    /// Eliminate every clock (and any temporary), keeping parameters and the
    /// free refinement variables.
    pub fn project_params(&self) -> Constraint {
        let drop: BTreeSet<Var> = self
            .vars()
            .into_iter()
            .filter(|v| matches!(v, Var::Clock(_) | Var::Aux(_)))
            .collect();
        self.eliminate(&drop)
    }

    /// Let every clock advance by the same nonnegative delay.
    pub fn time_elapse(&self) -> Constraint {
        let clocks: Vec<Var> = self.vars().into_iter().filter(Var::is_clock).collect();
        if clocks.is_empty() {
            return self.tidy();
        }
        let d = Var::Aux(self.fresh_aux());
        let mut shifted = self.clone();
        for x in &clocks {
            let by = LinearTerm::var(x.clone()).minus(&LinearTerm::var(d.clone()));
            shifted = shifted.substitute(x, &by);
            // the clock value before the delay was itself nonnegative
            shifted.push(Inequality::new(by, Rel::Ge));
        }
        shifted.eliminate(&BTreeSet::from([d]))
    }

    fn fresh_aux(&self) -> u32 {
        self.vars()
            .iter()
            .filter_map(|v| match v {
                Var::Aux(i) => Some(i + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Some nonnegative rational point satisfies every conjunct.
    pub fn is_satisfiable(&self) -> bool {
        let all = self.vars();
        !self.eliminate(&all).is_bottom()
    }

    /// Every nonnegative point of `self` satisfies `i`.
    pub fn implies(&self, i: &Inequality) -> bool {
        match i.trivial_under_nonneg() {
            Some(true) => return true,
            Some(false) => return !self.is_satisfiable(),
            None => {}
        }
        if self.conjuncts.contains(i) {
            return true;
        }
        i.negate().into_iter().all(|n| !self.with(n).is_satisfiable())
    }

    /// Solution set of `self` is contained in that of `other`.
    pub fn entails(&self, other: &Constraint) -> bool {
        if !self.is_satisfiable() {
            return true;
        }
        other.conjuncts.iter().all(|i| self.implies(i))
    }

    pub fn equivalent(&self, other: &Constraint) -> bool {
        self.entails(other) && other.entails(self)
    }

    /// Drop conjuncts implied by the others. The result has the same
    /// solution set.
    pub fn without_redundancy(&self) -> Constraint {
        let base = self.tidy();
        if base.is_bottom() {
            return base;
        }
        if !base.is_satisfiable() {
            return Constraint::bottom();
        }
        let mut kept = base.conjuncts.clone();
        let mut i = 0;
        while i < kept.len() {
            let candidate = kept[i].clone();
            let rest = Constraint {
                conjuncts: kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect(),
            };
            if rest.implies(&candidate) {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        Constraint { conjuncts: kept }
    }

    /// De Morgan: a single clause of negated conjuncts.
    pub fn negate(&self) -> Nncc {
        let clause: Vec<Inequality> = self.conjuncts.iter().flat_map(|i| i.negate()).collect();
        Nncc::from_clauses(vec![clause])
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return f.write_str("true");
        }
        for (k, i) in self.conjuncts.iter().enumerate() {
            if k > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Bounds {
    lower: Option<(Rat, bool)>,
    upper: Option<(Rat, bool)>,
    eq: Option<Rat>,
    conflict: bool,
}

impl Bounds {
    fn add_lower(&mut self, v: Rat, strict: bool) {
        self.lower = Some(match self.lower.take() {
            Some((w, s)) if w > v || (w == v && s) => (w, s),
            _ => (v, strict),
        });
    }

    fn add_upper(&mut self, v: Rat, strict: bool) {
        self.upper = Some(match self.upper.take() {
            Some((w, s)) if w < v || (w == v && s) => (w, s),
            _ => (v, strict),
        });
    }

    fn add_eq(&mut self, v: Rat) {
        match &self.eq {
            Some(w) if *w != v => self.conflict = true,
            _ => self.eq = Some(v),
        }
    }
}

fn tidy(items: impl IntoIterator<Item = Inequality>) -> Constraint {
    let mut by_dir: BTreeMap<BTreeMap<Var, Rat>, Bounds> = BTreeMap::new();
    for i in items {
        match i.trivial_under_nonneg() {
            Some(true) => continue,
            Some(false) => return Constraint::bottom(),
            None => {}
        }
        let (dir, flipped) = i.direction();
        let c = i.term().constant_part().clone();
        let b = by_dir.entry(dir).or_default();
        match (i.rel(), flipped) {
            (Rel::Eq, _) => b.add_eq(-c),
            (rel, false) => b.add_upper(-c, rel == Rel::Lt),
            (rel, true) => b.add_lower(c, rel == Rel::Lt),
        }
    }
    let mut out = Vec::new();
    for (dir, b) in by_dir {
        if b.conflict {
            return Constraint::bottom();
        }
        let base = LinearTerm::from_parts(dir, Rat::zero());
        let at = |v: &Rat| base.minus(&LinearTerm::constant(v.clone()));
        if let Some(e) = &b.eq {
            if let Some((l, s)) = &b.lower {
                if e < l || (e == l && *s) {
                    return Constraint::bottom();
                }
            }
            if let Some((u, s)) = &b.upper {
                if e > u || (e == u && *s) {
                    return Constraint::bottom();
                }
            }
            push_checked(&mut out, Inequality::new(at(e), Rel::Eq));
            continue;
        }
        match (&b.lower, &b.upper) {
            (Some((l, sl)), Some((u, su))) => {
                if l > u || (l == u && (*sl || *su)) {
                    return Constraint::bottom();
                }
                if l == u {
                    push_checked(&mut out, Inequality::new(at(l), Rel::Eq));
                } else {
                    push_checked(&mut out, Inequality::new(at(l), if *sl { Rel::Gt } else { Rel::Ge }));
                    push_checked(&mut out, Inequality::new(at(u), if *su { Rel::Lt } else { Rel::Le }));
                }
            }
            (Some((l, sl)), None) => {
                push_checked(&mut out, Inequality::new(at(l), if *sl { Rel::Gt } else { Rel::Ge }));
            }
            (None, Some((u, su))) => {
                push_checked(&mut out, Inequality::new(at(u), if *su { Rel::Lt } else { Rel::Le }));
            }
            (None, None) => {}
        }
    }
    if out.iter().any(|i| i.ground_value() == Some(false)) {
        return Constraint::bottom();
    }
    Constraint { conjuncts: out }
}

fn push_checked(out: &mut Vec<Inequality>, i: Inequality) {
    if i.trivial_under_nonneg() == Some(true) {
        return;
    }
    if i.trivial_under_nonneg() == Some(false) {
        out.push(Inequality::always_false());
        return;
    }
    out.push(i);
}

/// Prefer variables fixed by an equality, then the one whose elimination
/// creates the fewest new inequalities.
fn pick_var(cs: &[Inequality], candidates: &BTreeSet<Var>) -> Var {
    let mut best: Option<(i64, Var)> = None;
    for v in candidates {
        let mut lo = 1i64; // implicit v >= 0
        let mut hi = 0i64;
        let mut has_eq = false;
        for i in cs {
            let a = i.term().coeff(v);
            if a.is_zero() {
                continue;
            }
            if i.rel() == Rel::Eq {
                has_eq = true;
            } else if a.is_positive() {
                hi += 1;
            } else {
                lo += 1;
            }
        }
        let score = if has_eq { -1_000_000 } else { lo * hi - lo - hi };
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, v.clone()));
        }
    }
    best.expect("nonempty candidate set").1
}

fn eliminate_one(mut cs: Vec<Inequality>, v: &Var) -> Vec<Inequality> {
    if let Some(pos) = cs.iter().position(|i| i.rel() == Rel::Eq && i.mentions(v)) {
        let eq = cs.swap_remove(pos);
        let a = eq.term().coeff(v);
        let mut rest = eq.term().clone();
        rest.add_coeff(v.clone(), -a.clone());
        let by = rest.scaled(&(-a.recip()));
        let mut out: Vec<Inequality> = cs.iter().map(|i| i.substitute(v, &by)).collect();
        out.push(Inequality::new(by, Rel::Ge));
        return out;
    }
    let mut lower = vec![Inequality::new(LinearTerm::var(v.clone()), Rel::Ge)];
    let mut upper = Vec::new();
    let mut out = Vec::new();
    for i in cs {
        let a = i.term().coeff(v);
        if a.is_zero() {
            out.push(i);
        } else if a.is_positive() {
            upper.push(i);
        } else {
            lower.push(i);
        }
    }
    for l in &lower {
        let al = -l.term().coeff(v);
        for u in &upper {
            let au = u.term().coeff(v);
            let term = u.term().scaled(&al).plus(&l.term().scaled(&au));
            let rel = if l.is_strict() || u.is_strict() { Rel::Lt } else { Rel::Le };
            debug_assert!(term.coeff(v).is_zero());
            out.push(Inequality::new(term, rel));
        }
    }
    out
}

/// Convenience for building `term rel rhs` where both sides are terms.
pub fn ineq(lhs: LinearTerm, rel: Rel, rhs: LinearTerm) -> Inequality {
    Inequality::compare(&lhs, rel, &rhs)
}

/// `v rel c`
pub fn var_cmp(v: Var, rel: Rel, c: Rat) -> Inequality {
    Inequality::compare(&LinearTerm::var(v), rel, &LinearTerm::constant(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::linear::{int, ratio};

    fn x() -> Var {
        Var::Clock(0)
    }
    fn y() -> Var {
        Var::Clock(1)
    }
    fn p(n: &str) -> Var {
        Var::param(n)
    }
    fn lt(v: Var) -> LinearTerm {
        LinearTerm::var(v)
    }

    #[test]
    fn elapse_of_reset_clock() {
        let c = Constraint::single(var_cmp(x(), Rel::Eq, int(0)));
        let e = c.time_elapse();
        // x >= 0 is implicit, so the result is `true`
        assert!(e.is_top(), "{e}");
    }

    #[test]
    fn elapse_keeps_clock_differences() {
        let c = Constraint::from_conjuncts([
            ineq(lt(x()), Rel::Eq, lt(p("t"))),
            var_cmp(y(), Rel::Eq, int(0)),
        ]);
        let e = c.time_elapse();
        let expected = Constraint::single(ineq(lt(x()).minus(&lt(y())), Rel::Eq, lt(p("t"))));
        assert!(e.equivalent(&expected), "{e}");
    }

    #[test]
    fn projection_examples() {
        let c = Constraint::from_conjuncts([
            ineq(lt(x()), Rel::Eq, lt(p("t_PS"))),
            var_cmp(x(), Rel::Le, int(1)),
        ]);
        let pr = c.project_params();
        assert!(pr.equivalent(&Constraint::single(var_cmp(p("t_PS"), Rel::Le, int(1)))));
        let c = Constraint::from_conjuncts([
            var_cmp(x(), Rel::Eq, int(1)),
            ineq(lt(x()), Rel::Le, lt(p("t_PS"))),
        ]);
        assert!(c
            .project_params()
            .equivalent(&Constraint::single(var_cmp(p("t_PS"), Rel::Ge, int(1)))));
        let c = Constraint::from_conjuncts([
            ineq(lt(x()), Rel::Eq, lt(p("t_DS"))),
            var_cmp(x(), Rel::Ge, int(0)),
        ]);
        assert!(c.project_params().is_top());
    }

    #[test]
    fn strictness_propagates() {
        let c = Constraint::from_conjuncts([
            ineq(lt(x()), Rel::Lt, lt(p("a"))),
            ineq(lt(x()), Rel::Ge, lt(p("b"))),
        ]);
        let r = c.eliminate(&BTreeSet::from([x()]));
        let expected = Constraint::single(ineq(lt(p("b")), Rel::Lt, lt(p("a"))));
        assert!(r.equivalent(&expected), "{r}");
        let r = r.without_redundancy();
        assert_eq!(r.conjuncts().len(), 1, "{r}");
        assert!(r.conjuncts()[0].is_strict());
    }

    #[test]
    fn tidy_merges_bounds() {
        let c = Constraint::from_conjuncts([
            var_cmp(p("a"), Rel::Le, int(2)),
            var_cmp(p("a"), Rel::Ge, int(2)),
            var_cmp(p("a"), Rel::Le, int(3)),
        ]);
        let t = c.tidy();
        assert_eq!(t.conjuncts().len(), 1);
        assert_eq!(t.conjuncts()[0].rel(), Rel::Eq);
        let bad = Constraint::from_conjuncts([
            var_cmp(p("a"), Rel::Lt, ratio(1, 2)),
            var_cmp(p("a"), Rel::Gt, ratio(1, 2)),
        ]);
        assert!(bad.tidy().is_bottom());
    }

    #[test]
    fn parameters_are_nonnegative() {
        assert!(!Constraint::single(var_cmp(p("t"), Rel::Lt, int(0))).is_satisfiable());
        let boundary = Constraint::from_conjuncts([
            var_cmp(p("t"), Rel::Le, int(1)),
            var_cmp(p("t"), Rel::Ge, int(1)),
        ]);
        assert!(boundary.is_satisfiable());
    }

    #[test]
    fn redundancy_removal() {
        let c = Constraint::from_conjuncts([
            ineq(lt(p("a")).plus(&lt(p("b"))), Rel::Le, LinearTerm::constant(int(1))),
            var_cmp(p("a"), Rel::Le, int(2)),
        ]);
        assert_eq!(c.without_redundancy().len(), 1);
    }
}
