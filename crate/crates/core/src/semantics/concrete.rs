//! Point-valued interpreter: every service has a fixed response time and
//! every clock a rational value.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_traits::{Signed, Zero};

use crate::constraints::Rat;
use crate::process_model::{valuate_process, Activity, AtomicKind, ClockId, Model, ModelError, ParamValuation, ServiceRef, Value, Valuation};

use super::clocks::{activate, active_clocks, normalize};
use super::lts::{Lts, StateClass};
use super::step::fresh_clock;
use super::{Label, Rule};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConcreteState {
    pub vars: Valuation,
    pub process: Activity,
    pub clocks: BTreeMap<ClockId, Rat>,
    /// Accumulated response times, the point value of the symbolic delay.
    pub elapsed: Rat,
}

impl ConcreteState {
    pub fn initial(m: &Model, process: Activity) -> ConcreteState {
        let (vars, process) = normalize(&m.initial_valuation(), &process);
        ConcreteState { vars, process, clocks: BTreeMap::new(), elapsed: Rat::zero() }
    }
}

#[derive(Clone, Debug)]
pub struct ConcreteStep {
    pub label: Label,
    pub state: ConcreteState,
    /// Increase of the accumulated duration.
    pub delta: Rat,
    /// Real time that passed during the step.
    pub wait: Rat,
    pub bad: bool,
    /// Conditional taken by the step: id and whether the then branch was chosen.
    pub cond: Option<(u32, bool)>,
    /// Clock handed out by activation for this step.
    pub fresh: ClockId,
    /// Term after activation, before the rule fired.
    pub activated: Activity,
}

struct Partial {
    label: Vec<Rule>,
    vars: Valuation,
    process: Activity,
    clocks: BTreeMap<ClockId, Rat>,
    delta: Rat,
    wait: Rat,
    bad: bool,
    cond: Option<(u32, bool)>,
}

type Resolve<'a> = &'a dyn Fn(&ServiceRef) -> Rat;

fn advance(w: &BTreeMap<ClockId, Rat>, dt: &Rat) -> BTreeMap<ClockId, Rat> {
    w.iter().map(|(k, v)| (*k, v + dt)).collect()
}

fn idle_holds(p: &Activity, w: &BTreeMap<ClockId, Rat>, resolve: Resolve) -> bool {
    let val = |x: &ClockId| w.get(x).cloned().unwrap_or_else(Rat::zero);
    match p {
        Activity::Atomic(a) => match a.clock {
            Some(x) if a.kind.is_timed() => val(&x) <= resolve(&a.service),
            Some(x) => val(&x).is_zero(),
            None => true,
        },
        Activity::Pick(pk) => match pk.clock {
            Some(x) => {
                let now = val(&x);
                pk.on_message.iter().all(|(s, _)| now <= resolve(s)) && pk.on_alarm.iter().all(|(a, _)| &now <= a)
            }
            None => true,
        },
        Activity::Flow(a, b) => idle_holds(a, w, resolve) && idle_holds(b, w, resolve),
        Activity::Cond(c) => idle_holds(&c.then_branch, w, resolve) && idle_holds(&c.else_branch, w, resolve),
        Activity::Seq(a, _) => idle_holds(a, w, resolve),
        _ => true,
    }
}

fn rule_for(kind: AtomicKind) -> Rule {
    match kind {
        AtomicKind::Receive => Rule::Rec,
        AtomicKind::Reply => Rule::Reply,
        AtomicKind::SyncInvoke => Rule::SInv,
        AtomicKind::AsyncInvoke => Rule::AInv,
    }
}

fn fire(
    v: &Valuation,
    w: &BTreeMap<ClockId, Rat>,
    x: ClockId,
    target: &Rat,
    rule: Rule,
    process: Activity,
    delta: Rat,
    bad: bool,
) -> Option<Partial> {
    let now = w.get(&x).cloned().unwrap_or_else(Rat::zero);
    let wait = target - now;
    if wait.is_negative() {
        return None;
    }
    Some(Partial {
        label: vec![rule],
        vars: v.clone(),
        process,
        clocks: advance(w, &wait),
        delta,
        wait,
        bad,
        cond: None,
    })
}

fn derive(v: &Valuation, p: &Activity, w: &BTreeMap<ClockId, Rat>, resolve: Resolve) -> Vec<Partial> {
    match p {
        Activity::Atomic(at) => {
            let Some(x) = at.clock else { return vec![] };
            let (target, delta) = if at.kind.is_timed() {
                let t = resolve(&at.service);
                (t.clone(), t)
            } else {
                (Rat::zero(), Rat::zero())
            };
            fire(v, w, x, &target, rule_for(at.kind), Activity::Stop, delta, at.bad).into_iter().collect()
        }
        Activity::Pick(pk) => {
            let Some(x) = pk.clock else { return vec![] };
            let mut out = Vec::new();
            let targets = pk
                .on_message
                .iter()
                .enumerate()
                .map(|(i, (s, body))| (Rule::PickM(i as u32 + 1), resolve(s), body))
                .chain(pk.on_alarm.iter().enumerate().map(|(j, (a, body))| (Rule::PickA(j as u32 + 1), a.clone(), body)));
            for (rule, t, body) in targets {
                if let Some(r) = fire(v, w, x, &t, rule, body.clone(), t.clone(), false) {
                    if idle_holds(p, &r.clocks, resolve) {
                        out.push(r);
                    }
                }
            }
            out
        }
        Activity::Cond(c) => {
            let mk = |rule: Rule, then: bool| Partial {
                label: vec![rule],
                vars: v.clone(),
                process: if then { (*c.then_branch).clone() } else { (*c.else_branch).clone() },
                clocks: w.clone(),
                delta: Rat::zero(),
                wait: Rat::zero(),
                bad: false,
                cond: Some((c.id, then)),
            };
            match v.get(&c.guard) {
                Some(Value::Bool(true)) => vec![mk(Rule::Cond3, true)],
                Some(Value::Bool(false)) => vec![mk(Rule::Cond4, false)],
                _ => vec![mk(Rule::Cond1, true), mk(Rule::Cond2, false)],
            }
        }
        Activity::Seq(a, b) => derive(v, a, w, resolve)
            .into_iter()
            .map(|mut r| {
                let (v2, a2) = normalize(&r.vars, &r.process);
                if a2.is_stop() {
                    let (v3, b2) = normalize(&v2, b);
                    r.label.push(Rule::Seq2);
                    r.vars = v3;
                    r.process = b2;
                } else {
                    r.label.push(Rule::Seq1);
                    r.vars = v2;
                    r.process = Activity::Seq(Box::new(a2), b.clone());
                }
                r
            })
            .collect(),
        Activity::Flow(a, b) => {
            let mut out = Vec::new();
            for mut r in derive(v, a, w, resolve) {
                if idle_holds(b, &r.clocks, resolve) {
                    r.label.push(Rule::Flow1);
                    r.process = Activity::Flow(Box::new(r.process), b.clone());
                    out.push(r);
                }
            }
            for mut r in derive(v, b, w, resolve) {
                if idle_holds(a, &r.clocks, resolve) {
                    r.label.push(Rule::Flow2);
                    r.process = Activity::Flow(a.clone(), Box::new(r.process));
                    out.push(r);
                }
            }
            out
        }
        Activity::Assign { .. } | Activity::Stop => vec![],
    }
}

/// Every step available from a concrete state. `resolve` gives the response
/// time of each service reference.
pub fn concrete_successors(s: &ConcreteState, resolve: Resolve) -> Vec<ConcreteStep> {
    let x = fresh_clock(&s.process);
    let activated = activate(&s.process, x);
    let mut w = s.clocks.clone();
    w.insert(x, Rat::zero());
    derive(&s.vars, &activated, &w, resolve)
        .into_iter()
        .map(|r| {
            let (vars, process) = normalize(&r.vars, &r.process);
            let live = active_clocks(&process);
            let clocks = r.clocks.into_iter().filter(|(k, _)| live.contains(k)).collect();
            ConcreteStep {
                label: Label(r.label),
                state: ConcreteState { vars, process, clocks, elapsed: &s.elapsed + &r.delta },
                delta: r.delta,
                wait: r.wait,
                bad: r.bad,
                cond: r.cond,
                fresh: x,
                activated: activated.clone(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteRun {
    pub labels: Vec<Label>,
    pub elapsed: Rat,
    pub class: StateClass,
}

/// All maximal runs of the model under a parameter valuation.
pub fn concrete_runs(m: &Model, pi: &ParamValuation) -> Result<Vec<ConcreteRun>, ModelError> {
    let p = valuate_process(&m.process, pi)?;
    let resolve = |s: &ServiceRef| s.time.clone().unwrap_or_else(Rat::zero);
    let mut out = Vec::new();
    let mut stack = vec![(ConcreteState::initial(m, p), Vec::new(), false)];
    while let Some((s, labels, bad)) = stack.pop() {
        let next = concrete_successors(&s, &resolve);
        if next.is_empty() {
            let class = if bad { StateClass::Bad } else { StateClass::Good };
            out.push(ConcreteRun { labels, elapsed: s.elapsed, class });
            continue;
        }
        for step in next.into_iter().rev() {
            let mut l = labels.clone();
            l.push(step.label);
            stack.push((step.state, l, step.bad));
        }
    }
    Ok(out)
}

/// Distinct terminal outcomes (class, accumulated duration), exploring each
/// concrete state once.
pub fn concrete_outcomes(m: &Model, pi: &ParamValuation) -> Result<Vec<(StateClass, Rat)>, ModelError> {
    let p = valuate_process(&m.process, pi)?;
    let resolve = |s: &ServiceRef| s.time.clone().unwrap_or_else(Rat::zero);
    let mut seen = HashSet::new();
    let mut outcomes = Vec::new();
    let mut stack = vec![(ConcreteState::initial(m, p), false)];
    while let Some((s, bad)) = stack.pop() {
        if !seen.insert((s.clone(), bad)) {
            continue;
        }
        let next = concrete_successors(&s, &resolve);
        if next.is_empty() {
            let class = if bad { StateClass::Bad } else { StateClass::Good };
            let o = (class, s.elapsed.clone());
            if !outcomes.contains(&o) {
                outcomes.push(o);
            }
            continue;
        }
        for step in next {
            stack.push((step.state, step.bad));
        }
    }
    Ok(outcomes)
}

/// Symbolic states of `lts` that some concrete run under `pi` passes
/// through, found by walking concrete and symbolic steps in lockstep.
pub fn reached_states(m: &Model, lts: &Lts, pi: &ParamValuation) -> Result<BTreeSet<usize>, ModelError> {
    let p = valuate_process(&m.process, pi)?;
    let resolve = |s: &ServiceRef| s.time.clone().unwrap_or_else(Rat::zero);
    let mut seen = HashSet::new();
    let mut reached = BTreeSet::new();
    let mut stack = vec![(ConcreteState::initial(m, p), lts.initial())];
    while let Some((s, id)) = stack.pop() {
        if !seen.insert((s.clone(), id)) {
            continue;
        }
        reached.insert(id);
        for step in concrete_successors(&s, &resolve) {
            for (label, to) in lts.successors(id) {
                if *label == step.label && lts.states[to].via_bad == step.bad {
                    stack.push((step.state.clone(), to));
                }
            }
        }
    }
    Ok(reached)
}
