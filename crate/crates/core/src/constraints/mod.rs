//! Exact rational linear constraints over clocks and parameters.

mod convex;
mod linear;
mod nncc;
mod text;

pub use convex::{ineq, var_cmp, Constraint};
pub use linear::{fmt_rat, int, parse_rat, ratio, Inequality, LinearTerm, Rat, Rel, Var};
pub use nncc::{dnf_implies, equivalent, implication, implies_dnf, is_weaker, simplify_dnf, Clause, Dnf, Nncc};
pub use text::{
    parse_constraint, parse_dnf, parse_linear, parse_nncc, var_from_name, DnfJson, InequalityJson, NnccJson,
    ParseError,
};

/// Conjunct concatenation with duplicates removed.
pub fn conjoin(a: &Constraint, b: &Constraint) -> Constraint {
    a.and(b)
}

/// Evaluate an NNCC at a parameter point. Unbound variables are an error.
pub fn satisfies(pi: &std::collections::BTreeMap<Var, Rat>, n: &Nncc) -> Result<bool, Var> {
    let missing = n.vars().into_iter().find(|v| !pi.contains_key(v));
    if let Some(v) = missing {
        return Err(v);
    }
    Ok(n.eval(&|v| pi.get(v).cloned()).expect("all variables bound"))
}
