use std::collections::BTreeSet;

use crate::constraints::{ineq, Constraint, LinearTerm, Rel, Var};
use crate::process_model::{Activity, AtomicKind, ClockId, Value, Valuation};

use super::clocks::{activate, active_clocks, canonical_clocks, idle, normalize};
use super::{Label, Rule};

/// One outgoing symbolic transition before state merging.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub label: Label,
    pub vars: Valuation,
    pub process: Activity,
    pub constraint: Constraint,
    pub delay: LinearTerm,
    /// The executed atomic activity was marked bad.
    pub bad: bool,
}

struct Ctx {
    /// `C && x = 0` for the fresh clock.
    current: Constraint,
    /// Time elapse of `current`.
    elapsed: Constraint,
}

fn rule_for(kind: AtomicKind) -> Rule {
    match kind {
        AtomicKind::Receive => Rule::Rec,
        AtomicKind::Reply => Rule::Reply,
        AtomicKind::SyncInvoke => Rule::SInv,
        AtomicKind::AsyncInvoke => Rule::AInv,
    }
}

fn at_clock(ctx: &Ctx, x: ClockId, target: &LinearTerm) -> Constraint {
    ctx.elapsed.with(ineq(LinearTerm::var(Var::Clock(x)), Rel::Eq, target.clone()))
}

fn derive(v: &Valuation, p: &Activity, ctx: &Ctx, d: &LinearTerm) -> Vec<Derivation> {
    let leaf = |rule: Rule, process: Activity, constraint: Constraint, delay: LinearTerm, bad: bool| Derivation {
        label: Label(vec![rule]),
        vars: v.clone(),
        process,
        constraint,
        delay,
        bad,
    };
    match p {
        Activity::Atomic(at) => {
            let Some(x) = at.clock else { return vec![] };
            let target = if at.kind.is_timed() { at.service.response_term() } else { LinearTerm::zero() };
            let c = at_clock(ctx, x, &target);
            vec![leaf(rule_for(at.kind), Activity::Stop, c, d.plus(&target), at.bad)]
        }
        Activity::Pick(pk) => {
            let Some(x) = pk.clock else { return vec![] };
            let idle_here = idle(p);
            let mut out = Vec::new();
            for (i, (s, body)) in pk.on_message.iter().enumerate() {
                let t = s.response_term();
                let c = at_clock(ctx, x, &t).and(&idle_here);
                out.push(leaf(Rule::PickM(i as u32 + 1), body.clone(), c, d.plus(&t), false));
            }
            for (j, (a, body)) in pk.on_alarm.iter().enumerate() {
                let t = LinearTerm::constant(a.clone());
                let c = at_clock(ctx, x, &t).and(&idle_here);
                out.push(leaf(Rule::PickA(j as u32 + 1), body.clone(), c, d.plus(&t), false));
            }
            out
        }
        Activity::Cond(c) => {
            let then_ = || (*c.then_branch).clone();
            let else_ = || (*c.else_branch).clone();
            match v.get(&c.guard) {
                Some(Value::Bool(true)) => vec![leaf(Rule::Cond3, then_(), ctx.current.clone(), d.clone(), false)],
                Some(Value::Bool(false)) => vec![leaf(Rule::Cond4, else_(), ctx.current.clone(), d.clone(), false)],
                _ => vec![
                    leaf(Rule::Cond1, then_(), ctx.current.clone(), d.clone(), false),
                    leaf(Rule::Cond2, else_(), ctx.current.clone(), d.clone(), false),
                ],
            }
        }
        Activity::Seq(a, b) => derive(v, a, ctx, d)
            .into_iter()
            .map(|mut r| {
                let (v2, a2) = normalize(&r.vars, &r.process);
                if a2.is_stop() {
                    let (v3, b2) = normalize(&v2, b);
                    r.label.0.push(Rule::Seq2);
                    r.vars = v3;
                    r.process = b2;
                } else {
                    r.label.0.push(Rule::Seq1);
                    r.vars = v2;
                    r.process = Activity::Seq(Box::new(a2), b.clone());
                }
                r
            })
            .collect(),
        Activity::Flow(a, b) => {
            let mut out = Vec::new();
            let idle_b = idle(b);
            for mut r in derive(v, a, ctx, d) {
                r.label.0.push(Rule::Flow1);
                r.constraint = r.constraint.and(&idle_b);
                r.process = Activity::Flow(Box::new(r.process), b.clone());
                out.push(r);
            }
            let idle_a = idle(a);
            for mut r in derive(v, b, ctx, d) {
                r.label.0.push(Rule::Flow2);
                r.constraint = r.constraint.and(&idle_a);
                r.process = Activity::Flow(a.clone(), Box::new(r.process));
                out.push(r);
            }
            out
        }
        Activity::Assign { .. } | Activity::Stop => vec![],
    }
}

/// First clock id not carried by the term.
pub(crate) fn fresh_clock(p: &Activity) -> ClockId {
    let used = active_clocks(p);
    (0..).find(|x| !used.contains(x)).expect("clock ids are unbounded")
}

/// Raw derivations from a state: activation, rule application, then
/// normalisation of the resulting term. Unsatisfiable results are kept.
pub(crate) fn raw_derivations(
    v: &Valuation,
    p: &Activity,
    c: &Constraint,
    d: &LinearTerm,
) -> (Activity, ClockId, Vec<Derivation>) {
    let x = fresh_clock(p);
    let p1 = activate(p, x);
    let current = c.with(ineq(LinearTerm::var(Var::Clock(x)), Rel::Eq, LinearTerm::zero()));
    let elapsed = current.time_elapse();
    let ctx = Ctx { current, elapsed };
    let mut out = derive(v, &p1, &ctx, d);
    for r in &mut out {
        let (v2, p2) = normalize(&r.vars, &r.process);
        r.vars = v2;
        r.process = p2;
    }
    (p1, x, out)
}

/// Symbolic successors with satisfiable constraints, clocks outside the
/// resulting term eliminated and clocks renumbered canonically.
pub fn successors(v: &Valuation, p: &Activity, c: &Constraint, d: &LinearTerm) -> Vec<Derivation> {
    let (_, _, raw) = raw_derivations(v, p, c, d);
    raw.into_iter()
        .filter_map(|mut r| {
            let tidy = r.constraint.tidy();
            if !tidy.is_satisfiable() {
                return None;
            }
            let keep = active_clocks(&r.process);
            let drop: BTreeSet<Var> = tidy
                .vars()
                .into_iter()
                .filter(|v| match v {
                    Var::Clock(x) => !keep.contains(x),
                    Var::Aux(_) => true,
                    _ => false,
                })
                .collect();
            let pruned = tidy.eliminate(&drop).without_redundancy();
            let (p2, c2) = canonical_clocks(&r.process, &pruned);
            let mut conj = c2.conjuncts().to_vec();
            conj.sort();
            r.process = p2;
            r.constraint = Constraint::from_conjuncts(conj);
            Some(r)
        })
        .collect()
}
