//! Deadline constraints from the symbolic state space.
//!
//! Every terminal state contributes one clause: a good terminal requires its
//! accumulated duration to meet the deadline whenever its path constraint
//! holds, a bad terminal requires its path constraint to be false. A state's
//! constraint is the conjunction over the terminals reachable from it.

use std::collections::{BTreeMap, BTreeSet};

use crate::constraints::{implication, ineq, Constraint, Inequality, LinearTerm, Nncc, Rat, Rel, Var};
use crate::process_model::Model;
use crate::semantics::{build_lts, Lts, LtsError, StateClass};

/// Good-terminal and bad-terminal halves of a state's constraint.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstraintPair {
    pub good: Nncc,
    pub bad: Nncc,
}

impl ConstraintPair {
    pub fn combined(&self) -> Nncc {
        self.good.and(&self.bad)
    }
}

/// Component-wise conjunction.
pub fn combine_pairs(pairs: &[ConstraintPair]) -> ConstraintPair {
    ConstraintPair {
        good: Nncc::and_all(pairs.iter().map(|p| &p.good)),
        bad: Nncc::and_all(pairs.iter().map(|p| &p.bad)),
    }
}

/// Refined constraint of one state. `body` mentions the placeholders for
/// the state's own duration (`d_f`) and the elapsed time (`r_f`); `binding`
/// is the value of `d_f`, absent for bad terminals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rltc {
    pub body: Nncc,
    pub binding: Option<LinearTerm>,
}

impl Rltc {
    /// Conjuncts before closing: the body's clauses plus the binding.
    pub fn conjunct_count(&self) -> usize {
        self.body.len() + usize::from(self.binding.is_some())
    }

    /// The body with `d_f` replaced by its binding.
    pub fn closed(&self) -> Nncc {
        match &self.binding {
            Some(d) => self.body.substitute(&BTreeMap::from([(Var::Delay, d.clone())])),
            None => self.body.clone(),
        }
    }

    /// The body conjoined with `d_f = binding`.
    pub fn with_binding(&self) -> Nncc {
        match &self.binding {
            Some(d) => self.body.and(&Nncc::unit(ineq(LinearTerm::var(Var::Delay), Rel::Eq, d.clone()))),
            None => self.body.clone(),
        }
    }
}

/// Per-terminal clauses and per-state reachable terminal sets for one LTS.
pub struct Synthesizer<'a> {
    lts: &'a Lts,
    deadline: Rat,
    terminals: Vec<Vec<usize>>,
    projections: Vec<Option<Constraint>>,
    /// How many times each state's terminal set was computed.
    pub visits: Vec<u32>,
}

impl<'a> Synthesizer<'a> {
    pub fn new(lts: &'a Lts, deadline: Rat) -> Synthesizer<'a> {
        let n = lts.states.len();
        let mut s = Synthesizer { lts, deadline, terminals: vec![Vec::new(); n], projections: vec![None; n], visits: vec![0; n] };
        s.collect_terminals();
        s
    }

    fn collect_terminals(&mut self) {
        for s in self.lts.reverse_topological() {
            self.visits[s] += 1;
            let mut set: BTreeSet<usize> = BTreeSet::new();
            if self.lts.states[s].class != StateClass::NonTerminal {
                set.insert(s);
            }
            for (_, t) in self.lts.successors(s) {
                set.extend(self.terminals[t].iter().copied());
            }
            self.terminals[s] = set.into_iter().collect();
        }
    }

    pub fn terminals_from(&self, s: usize) -> &[usize] {
        &self.terminals[s]
    }

    fn projection(&mut self, t: usize) -> Constraint {
        if let Some(p) = &self.projections[t] {
            return p.clone();
        }
        let p = self.lts.states[t].constraint.project_params().without_redundancy();
        self.projections[t] = Some(p.clone());
        p
    }

    fn clause_pair(&mut self, t: usize, consequent_lhs: &LinearTerm) -> ConstraintPair {
        let proj = self.projection(t);
        match self.lts.states[t].class {
            StateClass::Good => {
                let deadline = LinearTerm::constant(self.deadline.clone());
                let goal: Inequality = ineq(consequent_lhs.clone(), Rel::Le, deadline);
                ConstraintPair { good: implication(&proj, &Constraint::single(goal)), bad: Nncc::top() }
            }
            StateClass::Bad => ConstraintPair { good: Nncc::top(), bad: proj.negate() },
            StateClass::NonTerminal => ConstraintPair::default(),
        }
    }

    /// Static constraint of state `s`: every terminal below it ends well.
    pub fn state_pair(&mut self, s: usize) -> ConstraintPair {
        let ts = self.terminals[s].clone();
        let pairs: Vec<ConstraintPair> = ts
            .into_iter()
            .map(|t| {
                let d = self.lts.states[t].delay.clone();
                self.clause_pair(t, &d)
            })
            .collect();
        combine_pairs(&pairs)
    }

    /// Refined constraint of state `s`: durations are counted from `s`
    /// (`D_t - d_f`) on top of the elapsed time `r_f`.
    pub fn rltc(&mut self, s: usize) -> Rltc {
        let ts = self.terminals[s].clone();
        let rest = LinearTerm::var(Var::Elapsed).minus(&LinearTerm::var(Var::Delay));
        let pairs: Vec<ConstraintPair> = ts
            .into_iter()
            .map(|t| {
                let lhs = self.lts.states[t].delay.plus(&rest);
                self.clause_pair(t, &lhs)
            })
            .collect();
        let pair = combine_pairs(&pairs);
        let binding = match self.lts.states[s].class {
            StateClass::Bad => None,
            _ => Some(self.lts.states[s].delay.clone()),
        };
        Rltc { body: pair.combined(), binding }
    }
}

/// Constraint on the parameters guaranteeing every run of `m` ends in a good
/// state within the deadline.
pub fn synth_sltc(m: &Model) -> Result<Nncc, LtsError> {
    let lts = build_lts(m)?;
    Ok(sltc_of(&lts, &m.deadline))
}

/// Static constraint of an already built state space.
pub fn sltc_of(lts: &Lts, deadline: &Rat) -> Nncc {
    Synthesizer::new(lts, deadline.clone()).state_pair(lts.initial()).combined()
}

/// Static constraint of the sub-system rooted at `s`.
pub fn synth_rec(lts: &Lts, s: usize, deadline: &Rat) -> Nncc {
    Synthesizer::new(lts, deadline.clone()).state_pair(s).combined()
}

/// Annotate every state with its closed refined constraint.
pub fn synth_rltc(lts: &mut Lts, deadline: &Rat) -> Vec<Rltc> {
    let all: Vec<Rltc> = {
        let mut syn = Synthesizer::new(lts, deadline.clone());
        (0..lts.states.len()).map(|s| syn.rltc(s)).collect()
    };
    for (s, r) in all.iter().enumerate() {
        lts.states[s].rltc = Some(r.closed());
    }
    all
}

/// Bind the elapsed-time placeholder to a constant.
pub fn bind_elapsed(n: &Nncc, r: &Rat) -> Nncc {
    n.substitute(&BTreeMap::from([(Var::Elapsed, LinearTerm::constant(r.clone()))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::constraints::{equivalent, int, parse_nncc};

    #[test]
    fn pick_model_constraint() {
        let m = bundled::load("pick").unwrap();
        let s = synth_sltc(&m).unwrap();
        // the alarm path is bad, so the message must arrive first and in time
        let expected = parse_nncc("t_PS < 1").unwrap();
        assert!(equivalent(&s, &expected), "{s}");
    }

    #[test]
    fn initial_rltc_matches_sltc_at_zero_elapsed() {
        let m = bundled::load("smis").unwrap();
        let mut lts = build_lts(&m).unwrap();
        let sltc = sltc_of(&lts, &m.deadline);
        let r = synth_rltc(&mut lts, &m.deadline);
        assert!(equivalent(&bind_elapsed(&r[0].closed(), &int(0)), &sltc));
    }
}
