//! Symbolic operational semantics and state-space construction.

mod clocks;
mod concrete;
mod export;
mod lts;
mod step;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use clocks::{activate, active_clocks, canonical_clocks, idle, map_clocks, normalize};
pub use concrete::{concrete_outcomes, concrete_runs, concrete_successors, reached_states, ConcreteRun, ConcreteState, ConcreteStep};
pub use export::{lts_to_dot, lts_to_json, LtsJson, StateJson, TransitionJson};
pub use lts::{build_lts, build_lts_with, Lts, LtsError, StateClass, SymbolicState, Transition};
pub use step::{successors, Derivation};

/// Operational rule names used in transition labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    SInv,
    Rec,
    Reply,
    AInv,
    Cond1,
    Cond2,
    Cond3,
    Cond4,
    Seq1,
    Seq2,
    Flow1,
    Flow2,
    /// 1-based index of the selected `onmsg` branch.
    PickM(u32),
    /// 1-based index of the selected `onalarm` branch.
    PickA(u32),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::SInv => "rSInv",
            Rule::Rec => "rRec",
            Rule::Reply => "rReply",
            Rule::AInv => "rAInv",
            Rule::Cond1 => "rCond1",
            Rule::Cond2 => "rCond2",
            Rule::Cond3 => "rCond3",
            Rule::Cond4 => "rCond4",
            Rule::Seq1 => "rSeq1",
            Rule::Seq2 => "rSeq2",
            Rule::Flow1 => "rFlow1",
            Rule::Flow2 => "rFlow2",
            Rule::PickM(i) => return write!(f, "(rPickM,{i})"),
            Rule::PickA(j) => return write!(f, "(rPickA,{j})"),
        };
        f.write_str(s)
    }
}

/// Rule sequence, innermost rule first.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub Vec<Rule>);

impl Label {
    pub fn rules(&self) -> &[Rule] {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str(">")
    }
}
