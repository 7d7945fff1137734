use std::collections::BTreeSet;
use std::time::Instant;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::constraints::{ineq, Constraint, LinearTerm, Nncc, Rat, Rel, Var};
use crate::process_model::ParamValuation;
use crate::semantics::{Label, Lts};
use crate::synthesis::bind_elapsed;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MonitorError {
    #[error("no transition labelled {label} leaves state s{state}")]
    NoSuchEdge { state: usize, label: String },
    #[error("negative time step {0}")]
    NegativeStep(String),
    #[error("state s{0} has no refined constraint")]
    NotAnnotated(usize),
    #[error("no state s{0}")]
    NoSuchState(usize),
}

/// Tracks the active symbolic state of one running instance.
#[derive(Clone, Debug)]
pub struct MonitorSession<'a> {
    lts: &'a Lts,
    active: usize,
    started_at: Instant,
    elapsed: Rat,
    trace: Vec<Label>,
}

impl<'a> MonitorSession<'a> {
    /// Start at the initial state. The LTS must carry refined constraints.
    pub fn new(lts: &'a Lts) -> MonitorSession<'a> {
        MonitorSession { lts, active: lts.initial(), started_at: Instant::now(), elapsed: Rat::zero(), trace: Vec::new() }
    }

    /// Start at an arbitrary state with a given elapsed time.
    pub fn at(lts: &'a Lts, state: usize, elapsed: Rat) -> Result<MonitorSession<'a>, MonitorError> {
        if state >= lts.states.len() {
            return Err(MonitorError::NoSuchState(state));
        }
        if elapsed.is_negative() {
            return Err(MonitorError::NegativeStep(crate::constraints::fmt_rat(&elapsed)));
        }
        Ok(MonitorSession { lts, active: state, started_at: Instant::now(), elapsed, trace: Vec::new() })
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn elapsed(&self) -> &Rat {
        &self.elapsed
    }

    pub fn trace(&self) -> &[Label] {
        &self.trace
    }

    pub fn started_at(&self) -> Instant {
        self.started_at
    }

    /// Follow the transition with `label` and add `dt` to the elapsed time.
    pub fn advance(&mut self, label: &Label, dt: &Rat) -> Result<(), MonitorError> {
        if dt.is_negative() {
            return Err(MonitorError::NegativeStep(crate::constraints::fmt_rat(dt)));
        }
        let next = self
            .lts
            .successors(self.active)
            .find(|(l, _)| *l == label)
            .map(|(_, t)| t)
            .ok_or_else(|| MonitorError::NoSuchEdge { state: self.active, label: label.to_string() })?;
        self.active = next;
        self.elapsed += dt;
        self.trace.push(label.clone());
        Ok(())
    }

    /// Refined constraint of the active state with the elapsed time bound.
    pub fn instantiated(&self) -> Result<Nncc, MonitorError> {
        let r = self.lts.states[self.active].rltc.as_ref().ok_or(MonitorError::NotAnnotated(self.active))?;
        Ok(bind_elapsed(r, &self.elapsed))
    }

    /// Whether the deadline is still guaranteed, assuming every service the
    /// active state can still invoke stays within its stipulated time.
    /// Services already done are left unconstrained.
    pub fn check_sat(&self, pi: &ParamValuation) -> Result<bool, MonitorError> {
        let n = self.instantiated()?;
        let remaining: BTreeSet<String> = self.lts.states[self.active].process.params();
        let bounds = Constraint::from_conjuncts(remaining.iter().filter_map(|p| {
            pi.get(p).map(|v| ineq(LinearTerm::var(Var::param(p)), Rel::Le, LinearTerm::constant(v.clone())))
        }));
        Ok(valid_under(&n, &bounds))
    }
}

/// Every point of `bounds` satisfies `n`.
fn valid_under(n: &Nncc, bounds: &Constraint) -> bool {
    n.clauses().iter().all(|clause| {
        let negated = Nncc::from_clauses(vec![clause.clone()]).negate();
        negated.terms().iter().all(|t| !bounds.and(t).is_satisfiable())
    })
}
