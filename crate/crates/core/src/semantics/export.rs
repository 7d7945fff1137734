use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dsl::print_activity;

use super::lts::{Lts, StateClass};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateJson {
    pub id: usize,
    pub vars: std::collections::BTreeMap<String, String>,
    pub process: String,
    pub constraint: String,
    pub delay: String,
    pub class: StateClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rltc: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TransitionJson {
    pub from: usize,
    pub label: String,
    pub to: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LtsJson {
    pub states: Vec<StateJson>,
    pub transitions: Vec<TransitionJson>,
}

pub fn lts_to_json(lts: &Lts) -> LtsJson {
    LtsJson {
        states: lts
            .states
            .iter()
            .enumerate()
            .map(|(id, s)| StateJson {
                id,
                vars: s.vars.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
                process: print_activity(&s.process, true),
                constraint: s.constraint.to_string(),
                delay: s.delay.to_string(),
                class: s.class,
                rltc: s.rltc.as_ref().map(|r| r.to_string()),
            })
            .collect(),
        transitions: lts
            .transitions
            .iter()
            .map(|t| TransitionJson { from: t.from, label: t.label.to_string(), to: t.to })
            .collect(),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn lts_to_dot(lts: &Lts) -> String {
    let mut out = String::from("digraph lts {\n  node [shape=box, fontname=monospace];\n");
    for (id, s) in lts.states.iter().enumerate() {
        let style = match s.class {
            StateClass::NonTerminal => "",
            StateClass::Good => ", peripheries=2",
            StateClass::Bad => ", peripheries=2, color=red",
        };
        let _ = writeln!(
            out,
            "  s{id} [label=\"s{id}\\nC: {}\\nD: {}\"{style}];",
            escape(&s.constraint.to_string()),
            escape(&s.delay.to_string())
        );
    }
    for t in &lts.transitions {
        let _ = writeln!(out, "  s{} -> s{} [label=\"{}\"];", t.from, t.to, escape(&t.label.to_string()));
    }
    out.push_str("}\n");
    out
}
