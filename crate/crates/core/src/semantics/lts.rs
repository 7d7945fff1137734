use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{Constraint, LinearTerm, Nncc};
use crate::process_model::{Activity, Model, ModelError, Valuation};

use super::clocks::normalize;
use super::step::successors;
use super::Label;

#[derive(Debug, Error)]
pub enum LtsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("state space exceeds {0} states")]
    TooLarge(usize),
    #[error("initial constraint is unsatisfiable")]
    EmptyInitial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateClass {
    NonTerminal,
    Good,
    Bad,
}

#[derive(Clone, Debug)]
pub struct SymbolicState {
    pub vars: Valuation,
    pub process: Activity,
    /// Over active clocks and parameters.
    pub constraint: Constraint,
    /// Accumulated parametric duration.
    pub delay: LinearTerm,
    /// Reached by executing a bad activity.
    pub via_bad: bool,
    pub class: StateClass,
    /// Refined constraint with the delay placeholder bound, once synthesised.
    pub rltc: Option<Nncc>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub label: Label,
    pub to: usize,
}

#[derive(Clone, Debug)]
pub struct Lts {
    pub states: Vec<SymbolicState>,
    pub transitions: Vec<Transition>,
    outgoing: Vec<Vec<usize>>,
}

impl Lts {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Transition indices leaving `s`, in exploration order.
    pub fn outgoing(&self, s: usize) -> &[usize] {
        &self.outgoing[s]
    }

    pub fn successors(&self, s: usize) -> impl Iterator<Item = (&Label, usize)> + '_ {
        self.outgoing[s].iter().map(move |&t| (&self.transitions[t].label, self.transitions[t].to))
    }

    pub fn terminals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.states.len()).filter(move |&s| self.states[s].class != StateClass::NonTerminal)
    }

    /// States reachable from `s`, `s` first, in breadth-first order.
    pub fn reachable_from(&self, s: usize) -> Vec<usize> {
        let mut seen = vec![false; self.states.len()];
        let mut out = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < out.len() {
            for (_, t) in self.successors(out[i]) {
                if !seen[t] {
                    seen[t] = true;
                    out.push(t);
                }
            }
            i += 1;
        }
        out
    }

    /// The sub-system rooted at `s`, renumbered with `s` as state 0.
    pub fn sub_lts(&self, s: usize) -> Lts {
        let keep = self.reachable_from(s);
        let mut index = vec![usize::MAX; self.states.len()];
        for (new, &old) in keep.iter().enumerate() {
            index[old] = new;
        }
        let states = keep.iter().map(|&o| self.states[o].clone()).collect();
        let transitions: Vec<Transition> = self
            .transitions
            .iter()
            .filter(|t| index[t.from] != usize::MAX)
            .map(|t| Transition { from: index[t.from], label: t.label.clone(), to: index[t.to] })
            .collect();
        Lts::from_parts(states, transitions)
    }

    fn from_parts(states: Vec<SymbolicState>, transitions: Vec<Transition>) -> Lts {
        let mut outgoing = vec![Vec::new(); states.len()];
        for (i, t) in transitions.iter().enumerate() {
            outgoing[t.from].push(i);
        }
        Lts { states, transitions, outgoing }
    }

    /// Post-order over states reachable from the root: every state comes
    /// after all of its successors.
    pub fn reverse_topological(&self) -> Vec<usize> {
        let n = self.states.len();
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
        done[0] = true;
        while let Some((s, k)) = stack.pop() {
            match self.outgoing[s].get(k) {
                Some(&t) => {
                    stack.push((s, k + 1));
                    let to = self.transitions[t].to;
                    if !done[to] {
                        done[to] = true;
                        stack.push((to, 0));
                    }
                }
                None => order.push(s),
            }
        }
        order
    }
}

type MergeKey = (Valuation, Activity, LinearTerm, bool);

/// Explore the symbolic state space breadth first.
pub fn build_lts(m: &Model) -> Result<Lts, LtsError> {
    build_lts_with(m, 2_000_000)
}

/// As [`build_lts`] with an explicit bound on the number of states.
pub fn build_lts_with(m: &Model, max_states: usize) -> Result<Lts, LtsError> {
    m.validate()?;
    let init_c = m.init.without_redundancy();
    if init_c.is_bottom() {
        return Err(LtsError::EmptyInitial);
    }
    let (v0, p0) = normalize(&m.initial_valuation(), &m.process);
    let mut states = vec![SymbolicState {
        vars: v0,
        process: p0,
        constraint: init_c,
        delay: LinearTerm::zero(),
        via_bad: false,
        class: StateClass::NonTerminal,
        rltc: None,
    }];
    let mut transitions = Vec::new();
    let mut index: HashMap<MergeKey, Vec<usize>> = HashMap::new();
    {
        let s = &states[0];
        index.insert((s.vars.clone(), s.process.clone(), s.delay.clone(), false), vec![0]);
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(id) = queue.pop_front() {
        let (v, p, c, d) = {
            let s = &states[id];
            (s.vars.clone(), s.process.clone(), s.constraint.clone(), s.delay.clone())
        };
        for r in successors(&v, &p, &c, &d) {
            let key = (r.vars.clone(), r.process.clone(), r.delay.clone(), r.bad);
            let bucket = index.entry(key).or_default();
            let existing = bucket.iter().copied().find(|&k| {
                let other = &states[k].constraint;
                *other == r.constraint || (other.vars() == r.constraint.vars() && other.equivalent(&r.constraint))
            });
            let to = match existing {
                Some(k) => k,
                None => {
                    let k = states.len();
                    if k >= max_states {
                        return Err(LtsError::TooLarge(max_states));
                    }
                    bucket.push(k);
                    states.push(SymbolicState {
                        vars: r.vars,
                        process: r.process,
                        constraint: r.constraint,
                        delay: r.delay,
                        via_bad: r.bad,
                        class: StateClass::NonTerminal,
                        rltc: None,
                    });
                    queue.push_back(k);
                    k
                }
            };
            transitions.push(Transition { from: id, label: r.label, to });
        }
    }
    let mut lts = Lts::from_parts(states, transitions);
    for s in 0..lts.states.len() {
        if lts.outgoing[s].is_empty() {
            lts.states[s].class = if lts.states[s].via_bad { StateClass::Bad } else { StateClass::Good };
        }
    }
    Ok(lts)
}
