//! Non-necessarily-convex constraints: CNF storage, DNF reporting, and a
//! branch-and-prune satisfiability search over clause choices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::convex::Constraint;
use super::linear::{Inequality, LinearTerm, Rat, Rel, Var};

pub type Clause = Vec<Inequality>;

/// Conjunction of clauses, each clause a disjunction of inequalities.
/// No clauses means `true`; an empty clause means `false`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Nncc {
    clauses: Vec<Clause>,
}

/// Disjunction of convex terms. No terms means `false`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Dnf {
    terms: Vec<Constraint>,
}

impl Nncc {
    pub fn top() -> Nncc {
        Nncc::default()
    }

    pub fn bottom() -> Nncc {
        Nncc { clauses: vec![Vec::new()] }
    }

    pub fn from_clauses(clauses: Vec<Clause>) -> Nncc {
        Nncc { clauses }
    }

    pub fn unit(i: Inequality) -> Nncc {
        Nncc { clauses: vec![vec![i]] }
    }

    /// One unit clause per conjunct.
    pub fn from_constraint(c: &Constraint) -> Nncc {
        Nncc { clauses: c.conjuncts().iter().map(|i| vec![i.clone()]).collect() }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Clause concatenation. Duplicates are kept so clause counts stay
    /// meaningful.
    pub fn and(&self, other: &Nncc) -> Nncc {
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().cloned());
        Nncc { clauses }
    }

    pub fn and_all<'a>(parts: impl IntoIterator<Item = &'a Nncc>) -> Nncc {
        let mut clauses = Vec::new();
        for p in parts {
            clauses.extend(p.clauses.iter().cloned());
        }
        Nncc { clauses }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.clauses.iter().flatten().flat_map(|i| i.vars().cloned()).collect()
    }

    /// Simultaneous substitution of the bound variables.
    pub fn substitute(&self, bindings: &BTreeMap<Var, LinearTerm>) -> Nncc {
        let sub = |i: &Inequality| {
            if !i.vars().any(|v| bindings.contains_key(v)) {
                return i.clone();
            }
            let mut t = LinearTerm::constant(i.term().constant_part().clone());
            for (v, c) in i.term().coeffs() {
                match bindings.get(v) {
                    Some(by) => t = t.plus(&by.scaled(c)),
                    None => t.add_coeff(v.clone(), c.clone()),
                }
            }
            Inequality::new(t, i.rel())
        };
        Nncc { clauses: self.clauses.iter().map(|cl| cl.iter().map(sub).collect()).collect() }
    }

    pub fn rename(&self, f: &impl Fn(&Var) -> Var) -> Nncc {
        Nncc { clauses: self.clauses.iter().map(|cl| cl.iter().map(|i| i.rename(f)).collect()).collect() }
    }

    /// `None` when some variable has no value.
    pub fn eval(&self, env: &impl Fn(&Var) -> Option<Rat>) -> Option<bool> {
        let mut all = true;
        for cl in &self.clauses {
            let mut any = false;
            for i in cl {
                any |= i.eval(env)?;
            }
            all &= any;
        }
        Some(all)
    }

    /// Exact negation as a DNF. Each clause yields one term, or two when
    /// an equality has to be negated into `<` or `>`.
    pub fn negate(&self) -> Dnf {
        let mut terms = Vec::new();
        for cl in &self.clauses {
            let mut partial = vec![Constraint::top()];
            for d in cl {
                let negs = d.negate();
                if negs.len() == 1 {
                    for t in &mut partial {
                        t.push(negs[0].clone());
                    }
                } else {
                    partial = partial.iter().flat_map(|t| negs.iter().map(|n| t.with(n.clone()))).collect();
                }
            }
            terms.extend(partial);
        }
        Dnf { terms }
    }

    pub fn is_satisfiable(&self) -> bool {
        let mut found = false;
        search(&Constraint::top(), &self.clauses, &mut |_| {
            found = true;
            false
        });
        found
    }
}

impl Dnf {
    pub fn bottom() -> Dnf {
        Dnf::default()
    }

    pub fn top() -> Dnf {
        Dnf { terms: vec![Constraint::top()] }
    }

    pub fn from_terms(terms: Vec<Constraint>) -> Dnf {
        Dnf { terms }
    }

    pub fn terms(&self) -> &[Constraint] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact negation as a CNF: one clause per term.
    pub fn negate(&self) -> Nncc {
        Nncc {
            clauses: self
                .terms
                .iter()
                .map(|t| t.conjuncts().iter().flat_map(|i| i.negate()).collect())
                .collect(),
        }
    }

    /// Distribute into CNF. Size is the product of term lengths, so this is
    /// meant for small hand-written formulas.
    pub fn to_nncc(&self) -> Nncc {
        let mut clauses: Vec<Clause> = vec![Vec::new()];
        if self.terms.is_empty() {
            return Nncc::bottom();
        }
        for t in &self.terms {
            if t.is_top() {
                return Nncc::top();
            }
            let mut next = Vec::new();
            for cl in &clauses {
                for i in t.conjuncts() {
                    let mut c = cl.clone();
                    if !c.contains(i) {
                        c.push(i.clone());
                    }
                    next.push(c);
                }
            }
            clauses = next;
        }
        for cl in &mut clauses {
            cl.sort();
        }
        clauses.sort();
        clauses.dedup();
        Nncc { clauses }
    }

    pub fn eval(&self, env: &impl Fn(&Var) -> Option<Rat>) -> Option<bool> {
        let mut any = false;
        for t in &self.terms {
            any |= t.eval(env)?;
        }
        Some(any)
    }

    pub fn is_satisfiable(&self) -> bool {
        self.terms.iter().any(Constraint::is_satisfiable)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.iter().flat_map(|t| t.vars()).collect()
    }
}

/// `¬antecedent ∨ consequent` in CNF.
pub fn implication(antecedent: &Constraint, consequent: &Constraint) -> Nncc {
    if antecedent.is_bottom() {
        return Nncc::top();
    }
    let neg: Clause = antecedent.conjuncts().iter().flat_map(|i| i.negate()).collect();
    Nncc {
        clauses: consequent
            .conjuncts()
            .iter()
            .map(|b| {
                let mut cl = neg.clone();
                cl.push(b.clone());
                cl
            })
            .collect(),
    }
}

/// `c1 ⊑ c2`: every nonnegative solution of `c1` satisfies `c2`.
pub fn is_weaker(c1: &Nncc, c2: &Nncc) -> bool {
    let base = match prepare(&c1.clauses) {
        Some(cl) => cl,
        None => return true,
    };
    for clause in &c2.clauses {
        // c1 ∧ ¬clause must be unsatisfiable
        let mut extra: Vec<Clause> = Vec::new();
        let mut unit = Constraint::top();
        for d in clause {
            let n = d.negate();
            if n.len() == 1 {
                unit.push(n.into_iter().next().expect("one"));
            } else {
                extra.push(n);
            }
        }
        if !unit.is_satisfiable() {
            continue;
        }
        let mut all = base.clone();
        all.extend(extra);
        let mut found = false;
        search(&unit, &all, &mut |_| {
            found = true;
            false
        });
        if found {
            return false;
        }
    }
    true
}

/// Mutual `is_weaker`.
pub fn equivalent(c1: &Nncc, c2: &Nncc) -> bool {
    is_weaker(c1, c2) && is_weaker(c2, c1)
}

/// `n ⊑ d` for a DNF right-hand side, without distributing `d` into CNF.
pub fn implies_dnf(n: &Nncc, d: &Dnf) -> bool {
    let mut clauses = n.clauses.clone();
    clauses.extend(d.negate().clauses);
    !Nncc { clauses }.is_satisfiable()
}

/// `d ⊑ n` for a DNF left-hand side.
pub fn dnf_implies(d: &Dnf, n: &Nncc) -> bool {
    let neg = n.negate();
    d.terms.iter().all(|t| neg.terms().iter().all(|nt| !t.and(nt).is_satisfiable()))
}

/// Equivalent DNF: unsatisfiable terms dropped, redundant conjuncts removed
/// within each term, and terms contained in another term removed.
pub fn simplify_dnf(n: &Nncc) -> Dnf {
    let mut leaves: Vec<Constraint> = Vec::new();
    search(&Constraint::top(), &n.clauses, &mut |leaf| {
        leaves.push(leaf.without_redundancy());
        true
    });
    leaves.retain(|t| !t.is_bottom());
    let mut sorted: Vec<Constraint> = leaves
        .into_iter()
        .map(|t| {
            let mut c: Vec<Inequality> = t.conjuncts().to_vec();
            c.sort();
            Constraint::from_conjuncts(c)
        })
        .collect();
    sorted.sort_by_key(|t| t.len());
    sorted.dedup();
    let mut kept: Vec<Constraint> = Vec::new();
    // fewer conjuncts first, so broader terms are kept and narrower dropped
    for t in sorted {
        if kept.iter().any(|k| t.entails(k)) {
            continue;
        }
        kept.retain(|k| !k.entails(&t));
        kept.push(t);
    }
    Dnf { terms: kept }
}

/// Normalize clauses for search. `None` means some clause is false.
fn prepare(clauses: &[Clause]) -> Option<Vec<Clause>> {
    let mut out: Vec<Clause> = Vec::new();
    'clauses: for cl in clauses {
        let mut kept: Clause = Vec::new();
        for d in cl {
            match d.trivial_under_nonneg() {
                Some(true) => continue 'clauses,
                Some(false) => {}
                None => kept.push(d.clone()),
            }
        }
        if kept.is_empty() {
            return None;
        }
        kept.sort();
        kept.dedup();
        // valid clauses constrain nothing
        let negation = Constraint::from_conjuncts(kept.iter().filter(|d| d.rel() != Rel::Eq).flat_map(|d| d.negate()));
        if kept.iter().all(|d| d.rel() != Rel::Eq) && !negation.is_satisfiable() {
            continue;
        }
        out.push(kept);
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out.dedup();
    // syntactic subsumption: a clause whose disjuncts include all of a
    // shorter clause's disjuncts is implied by it
    let mut kept: Vec<Clause> = Vec::new();
    for cl in out {
        if kept.iter().any(|k| k.iter().all(|d| cl.contains(d))) {
            continue;
        }
        kept.push(cl);
    }
    Some(kept)
}

/// Enumerate convex leaves whose union is the solution set of
/// `base ∧ clauses`. `visit` returns whether to continue.
pub(crate) fn search(base: &Constraint, clauses: &[Clause], visit: &mut dyn FnMut(&Constraint) -> bool) {
    let prepared = match prepare(clauses) {
        Some(p) => p,
        None => return,
    };
    let base = base.tidy();
    if base.is_bottom() || !base.is_satisfiable() {
        return;
    }
    let pending: Vec<&Clause> = prepared.iter().collect();
    descend(base, pending, visit);
}

fn descend(current: Constraint, pending: Vec<&Clause>, visit: &mut dyn FnMut(&Constraint) -> bool) -> bool {
    let mut open: Vec<(&Clause, Vec<Inequality>)> = Vec::new();
    for cl in pending {
        let mut consistent = Vec::new();
        let mut satisfied = false;
        for d in cl.iter() {
            if current.implies(d) {
                satisfied = true;
                break;
            }
            if current.with(d.clone()).is_satisfiable() {
                consistent.push(d.clone());
            }
        }
        if satisfied {
            continue;
        }
        if consistent.is_empty() {
            return true;
        }
        open.push((cl, consistent));
    }
    if open.is_empty() {
        return visit(&current);
    }
    // unit propagation
    if open.iter().any(|(_, c)| c.len() == 1) {
        let mut next = current.clone();
        let mut rest = Vec::new();
        for (cl, c) in &open {
            if c.len() == 1 {
                next.push(c[0].clone());
            } else {
                rest.push(*cl);
            }
        }
        let next = next.tidy();
        if next.is_bottom() || !next.is_satisfiable() {
            return true;
        }
        return descend(next, rest, visit);
    }
    let pick = open
        .iter()
        .enumerate()
        .min_by_key(|(_, (_, c))| c.len())
        .map(|(k, _)| k)
        .expect("nonempty");
    let (_, choices) = open[pick].clone();
    let rest: Vec<&Clause> = open.iter().enumerate().filter(|(k, _)| *k != pick).map(|(_, (cl, _))| *cl).collect();
    let mut excluded: Vec<Inequality> = Vec::new();
    for d in choices {
        let mut next = current.with(d.clone());
        for e in &excluded {
            next.push(e.clone());
        }
        let next = next.tidy();
        if !next.is_bottom() && next.is_satisfiable() && !descend(next, rest.clone(), visit) {
            return false;
        }
        // later branches may assume this disjunct is false
        let neg = d.negate();
        if neg.len() == 1 {
            excluded.extend(neg);
        }
    }
    true
}

impl fmt::Display for Nncc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return f.write_str("true");
        }
        for (k, cl) in self.clauses.iter().enumerate() {
            if k > 0 {
                f.write_str(" && ")?;
            }
            match cl.len() {
                0 => f.write_str("false")?,
                1 => write!(f, "{}", cl[0])?,
                _ => {
                    f.write_str("(")?;
                    for (j, d) in cl.iter().enumerate() {
                        if j > 0 {
                            f.write_str(" || ")?;
                        }
                        write!(f, "{d}")?;
                    }
                    f.write_str(")")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("false");
        }
        for (k, t) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" || ")?;
            }
            if t.len() > 1 {
                write!(f, "({t})")?;
            } else {
                write!(f, "{t}")?;
            }
        }
        Ok(())
    }
}
