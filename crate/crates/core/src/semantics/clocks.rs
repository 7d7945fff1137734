use std::collections::{BTreeMap, BTreeSet};

use crate::constraints::{ineq, Constraint, LinearTerm, Rel, Var};
use crate::process_model::{Activity, Atomic, ClockId, Cond, Pick, Valuation};

fn clock_term(x: ClockId) -> LinearTerm {
    LinearTerm::var(Var::Clock(x))
}

/// Give clock `x` to every frontier activity that has none yet.
pub fn activate(p: &Activity, x: ClockId) -> Activity {
    match p {
        Activity::Atomic(a) if a.clock.is_none() => Activity::Atomic(Atomic { clock: Some(x), ..a.clone() }),
        Activity::Pick(pk) if pk.clock.is_none() => Activity::Pick(Pick { clock: Some(x), ..pk.clone() }),
        Activity::Flow(a, b) => Activity::flow(activate(a, x), activate(b, x)),
        Activity::Cond(c) => Activity::Cond(Cond {
            then_branch: Box::new(activate(&c.then_branch, x)),
            else_branch: Box::new(activate(&c.else_branch, x)),
            ..c.clone()
        }),
        Activity::Seq(a, b) => Activity::Seq(Box::new(activate(a, x)), b.clone()),
        _ => p.clone(),
    }
}

/// Clocks carried by the term.
pub fn active_clocks(p: &Activity) -> BTreeSet<ClockId> {
    let mut out = BTreeSet::new();
    p.walk(&mut |a| match a {
        Activity::Atomic(Atomic { clock: Some(x), .. }) | Activity::Pick(Pick { clock: Some(x), .. }) => {
            out.insert(*x);
        }
        _ => {}
    });
    out
}

/// How long the frontier may wait, as a constraint over clocks and parameters.
pub fn idle(p: &Activity) -> Constraint {
    let mut c = Constraint::top();
    idle_into(p, &mut c);
    c
}

fn idle_into(p: &Activity, out: &mut Constraint) {
    match p {
        Activity::Atomic(Atomic { kind, service, clock: Some(x), .. }) => {
            if kind.is_timed() {
                out.push(ineq(clock_term(*x), Rel::Le, service.response_term()));
            } else {
                out.push(ineq(clock_term(*x), Rel::Eq, LinearTerm::zero()));
            }
        }
        Activity::Pick(Pick { on_message, on_alarm, clock: Some(x) }) => {
            for (s, _) in on_message {
                out.push(ineq(clock_term(*x), Rel::Le, s.response_term()));
            }
            for (a, _) in on_alarm {
                out.push(ineq(clock_term(*x), Rel::Le, LinearTerm::constant(a.clone())));
            }
        }
        Activity::Flow(a, b) => {
            idle_into(a, out);
            idle_into(b, out);
        }
        Activity::Cond(c) => {
            idle_into(&c.then_branch, out);
            idle_into(&c.else_branch, out);
        }
        Activity::Seq(a, _) => idle_into(a, out),
        _ => {}
    }
}

/// Execute assignments at the frontier and discharge finished parts of
/// sequences and flows.
pub fn normalize(v: &Valuation, p: &Activity) -> (Valuation, Activity) {
    let mut v = v.clone();
    let p = norm(&mut v, p);
    (v, p)
}

fn norm(v: &mut Valuation, p: &Activity) -> Activity {
    match p {
        Activity::Assign { var, value } => {
            v.insert(var.clone(), *value);
            Activity::Stop
        }
        Activity::Seq(a, b) => match norm(v, a) {
            Activity::Stop => norm(v, b),
            a2 => Activity::Seq(Box::new(a2), b.clone()),
        },
        Activity::Flow(a, b) => {
            let a2 = norm(v, a);
            let b2 = norm(v, b);
            match (a2, b2) {
                (Activity::Stop, b2) => b2,
                (a2, Activity::Stop) => a2,
                (a2, b2) => Activity::flow(a2, b2),
            }
        }
        _ => p.clone(),
    }
}

/// Rename every clock in the term.
pub fn map_clocks(p: &Activity, f: &impl Fn(ClockId) -> ClockId) -> Activity {
    match p {
        Activity::Atomic(a) => Activity::Atomic(Atomic { clock: a.clock.map(f), ..a.clone() }),
        Activity::Pick(pk) => Activity::Pick(Pick {
            on_message: pk.on_message.iter().map(|(s, a)| (s.clone(), map_clocks(a, f))).collect(),
            on_alarm: pk.on_alarm.iter().map(|(d, a)| (d.clone(), map_clocks(a, f))).collect(),
            clock: pk.clock.map(f),
        }),
        Activity::Flow(a, b) => Activity::flow(map_clocks(a, f), map_clocks(b, f)),
        Activity::Seq(a, b) => Activity::seq(map_clocks(a, f), map_clocks(b, f)),
        Activity::Cond(c) => Activity::Cond(Cond {
            then_branch: Box::new(map_clocks(&c.then_branch, f)),
            else_branch: Box::new(map_clocks(&c.else_branch, f)),
            ..c.clone()
        }),
        Activity::Assign { .. } | Activity::Stop => p.clone(),
    }
}

/// Renumber clocks by first occurrence in a pre-order walk so that states
/// differing only in clock names coincide.
pub fn canonical_clocks(p: &Activity, c: &Constraint) -> (Activity, Constraint) {
    let mut order: BTreeMap<ClockId, ClockId> = BTreeMap::new();
    p.walk(&mut |a| {
        let x = match a {
            Activity::Atomic(at) => at.clock,
            Activity::Pick(pk) => pk.clock,
            _ => None,
        };
        if let Some(x) = x {
            let next = order.len() as ClockId;
            order.entry(x).or_insert(next);
        }
    });
    if order.iter().all(|(k, v)| k == v) {
        return (p.clone(), c.clone());
    }
    let p2 = map_clocks(p, &|x| order.get(&x).copied().unwrap_or(x));
    let c2 = c.rename(&|v| match v {
        Var::Clock(x) => Var::Clock(order.get(x).copied().unwrap_or(*x)),
        other => other.clone(),
    });
    (p2, c2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_model::{ServiceRef, Value};

    fn s(n: &str) -> ServiceRef {
        ServiceRef::new(n, Some(&format!("t_{n}")))
    }

    #[test]
    fn activation_follows_the_frontier() {
        let p = Activity::seq(Activity::flow(Activity::sinv(s("A")), Activity::ainv(s("B"))), Activity::sinv(s("C")));
        let q = activate(&p, 0);
        assert_eq!(active_clocks(&q), BTreeSet::from([0]));
        assert_eq!(idle(&q).len(), 2);
        // already-clocked nodes keep their clock
        let r = activate(&q, 1);
        assert_eq!(r, q);
    }

    #[test]
    fn normalize_folds_assignments_and_stops() {
        let p = Activity::seq(
            Activity::flow(Activity::Stop, Activity::Assign { var: "g".into(), value: Value::Bool(true) }),
            Activity::sinv(s("A")),
        );
        let (v, q) = normalize(&Valuation::new(), &p);
        assert_eq!(v.get("g"), Some(&Value::Bool(true)));
        assert_eq!(q, Activity::sinv(s("A")));
    }
}
