//! Composite service models: process terms, services, variables, and
//! parameter valuations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::constraints::{var_cmp, Constraint, LinearTerm, Rat, Rel, Var};

pub type ClockId = u32;

/// Parameter name to nonnegative rational.
pub type ParamValuation = BTreeMap<String, Rat>;

/// Variable name to value; absent entries are uninitialized.
pub type Valuation = BTreeMap<String, Value>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("parameter `{0}` has a negative value")]
    NegativeParam(String),
    #[error("unknown service `{0}`")]
    UnknownService(String),
    #[error("duplicate service `{0}`")]
    DuplicateService(String),
    #[error("duplicate declaration `{0}`")]
    Duplicate(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("guard variable `{0}` is not boolean")]
    NonBooleanGuard(String),
    #[error("value {value} is outside the domain of `{var}`")]
    OutOfDomain { var: String, value: Value },
    #[error("pick without branches")]
    EmptyPick,
    #[error("alarm delay {0} is not positive")]
    NonPositiveAlarm(String),
    #[error("deadline must be positive")]
    NonPositiveDeadline,
    #[error("parameter name `{0}` is reserved")]
    ReservedName(String),
    #[error("initial constraint mentions `{0}`, which is not a parameter")]
    NonParamInInit(String),
    #[error("freshly built models carry no clocks")]
    ClockedModel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Bool,
    Int { lo: i64, hi: i64 },
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Int { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
    pub init: Option<Value>,
}

/// A component service. Without a parameter its response time is zero,
/// which is how the composition's own client endpoint is modelled.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Service {
    pub name: String,
    pub param: Option<String>,
}

/// Reference to a service from inside a process term. `time` is filled by
/// [`valuate_process`] with the concrete response time.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServiceRef {
    pub name: Arc<str>,
    pub param: Option<Arc<str>>,
    pub time: Option<Rat>,
}

impl ServiceRef {
    pub fn new(name: &str, param: Option<&str>) -> ServiceRef {
        ServiceRef { name: Arc::from(name), param: param.map(Arc::from), time: None }
    }

    /// Symbolic response time: the parameter, else the stored constant,
    /// else zero.
    pub fn response_term(&self) -> LinearTerm {
        match (&self.param, &self.time) {
            (Some(p), _) => LinearTerm::var(Var::Param(p.clone())),
            (None, Some(t)) => LinearTerm::constant(t.clone()),
            (None, None) => LinearTerm::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AtomicKind {
    Receive,
    Reply,
    SyncInvoke,
    AsyncInvoke,
}

impl AtomicKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AtomicKind::Receive => "receive",
            AtomicKind::Reply => "reply",
            AtomicKind::SyncInvoke => "sinv",
            AtomicKind::AsyncInvoke => "ainv",
        }
    }

    /// Waits for the service's response time rather than completing at once.
    pub fn is_timed(self) -> bool {
        matches!(self, AtomicKind::Receive | AtomicKind::SyncInvoke)
    }

    /// Starts a component service invocation.
    pub fn is_invocation(self) -> bool {
        matches!(self, AtomicKind::SyncInvoke | AtomicKind::AsyncInvoke)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atomic {
    pub kind: AtomicKind,
    pub service: ServiceRef,
    pub bad: bool,
    pub clock: Option<ClockId>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pick {
    pub on_message: Vec<(ServiceRef, Activity)>,
    pub on_alarm: Vec<(Rat, Activity)>,
    pub clock: Option<ClockId>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cond {
    /// Stable identifier, assigned in source order.
    pub id: u32,
    pub then_branch: Box<Activity>,
    pub guard: String,
    pub else_branch: Box<Activity>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Activity {
    Atomic(Atomic),
    Flow(Box<Activity>, Box<Activity>),
    Seq(Box<Activity>, Box<Activity>),
    Cond(Cond),
    Pick(Pick),
    /// Untimed variable update, folded into the surrounding sequence.
    Assign { var: String, value: Value },
    Stop,
}

impl Activity {
    fn atomic(kind: AtomicKind, s: ServiceRef) -> Activity {
        Activity::Atomic(Atomic { kind, service: s, bad: false, clock: None })
    }

    pub fn receive(s: ServiceRef) -> Activity {
        Activity::atomic(AtomicKind::Receive, s)
    }

    pub fn reply(s: ServiceRef) -> Activity {
        Activity::atomic(AtomicKind::Reply, s)
    }

    pub fn sinv(s: ServiceRef) -> Activity {
        Activity::atomic(AtomicKind::SyncInvoke, s)
    }

    pub fn ainv(s: ServiceRef) -> Activity {
        Activity::atomic(AtomicKind::AsyncInvoke, s)
    }

    /// Mark an atomic activity as bad; other activities are returned as is.
    pub fn bad(self) -> Activity {
        match self {
            Activity::Atomic(mut a) => {
                a.bad = true;
                Activity::Atomic(a)
            }
            other => other,
        }
    }

    pub fn seq(a: Activity, b: Activity) -> Activity {
        Activity::Seq(Box::new(a), Box::new(b))
    }

    pub fn flow(a: Activity, b: Activity) -> Activity {
        Activity::Flow(Box::new(a), Box::new(b))
    }

    pub fn cond(id: u32, then_branch: Activity, guard: &str, else_branch: Activity) -> Activity {
        Activity::Cond(Cond {
            id,
            then_branch: Box::new(then_branch),
            guard: guard.to_string(),
            else_branch: Box::new(else_branch),
        })
    }

    pub fn pick(on_message: Vec<(ServiceRef, Activity)>, on_alarm: Vec<(Rat, Activity)>) -> Activity {
        Activity::Pick(Pick { on_message, on_alarm, clock: None })
    }

    /// Right-nested sequence; `Stop` for an empty list.
    pub fn seq_all(items: Vec<Activity>) -> Activity {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => Activity::Stop,
            Some(last) => it.fold(last, |acc, a| Activity::seq(a, acc)),
        }
    }

    /// Right-nested flow; `Stop` for an empty list.
    pub fn flow_all(items: Vec<Activity>) -> Activity {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => Activity::Stop,
            Some(last) => it.fold(last, |acc, a| Activity::flow(a, acc)),
        }
    }

    pub fn is_stop(&self) -> bool {
        matches!(self, Activity::Stop)
    }

    /// Pre-order walk over every node, branches included.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Activity)) {
        f(self);
        match self {
            Activity::Flow(a, b) | Activity::Seq(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Activity::Cond(c) => {
                c.then_branch.walk(f);
                c.else_branch.walk(f);
            }
            Activity::Pick(p) => {
                for (_, a) in &p.on_message {
                    a.walk(f);
                }
                for (_, a) in &p.on_alarm {
                    a.walk(f);
                }
            }
            Activity::Atomic(_) | Activity::Assign { .. } | Activity::Stop => {}
        }
    }

    /// Rebuild with every service reference transformed.
    pub fn map_services(&self, f: &mut impl FnMut(&ServiceRef) -> ServiceRef) -> Activity {
        match self {
            Activity::Atomic(a) => Activity::Atomic(Atomic { service: f(&a.service), ..a.clone() }),
            Activity::Flow(a, b) => Activity::flow(a.map_services(f), b.map_services(f)),
            Activity::Seq(a, b) => Activity::seq(a.map_services(f), b.map_services(f)),
            Activity::Cond(c) => Activity::Cond(Cond {
                id: c.id,
                then_branch: Box::new(c.then_branch.map_services(f)),
                guard: c.guard.clone(),
                else_branch: Box::new(c.else_branch.map_services(f)),
            }),
            Activity::Pick(p) => Activity::Pick(Pick {
                on_message: p.on_message.iter().map(|(s, a)| (f(s), a.map_services(f))).collect(),
                on_alarm: p.on_alarm.iter().map(|(d, a)| (d.clone(), a.map_services(f))).collect(),
                clock: p.clock,
            }),
            Activity::Assign { .. } | Activity::Stop => self.clone(),
        }
    }

    /// Services referenced anywhere in the term.
    pub fn services(&self) -> Vec<&ServiceRef> {
        let mut out = Vec::new();
        self.walk(&mut |a| match a {
            Activity::Atomic(at) => out.push(&at.service),
            Activity::Pick(p) => out.extend(p.on_message.iter().map(|(s, _)| s)),
            _ => {}
        });
        out
    }

    /// Parameters of the services referenced anywhere in the term.
    pub fn params(&self) -> BTreeSet<String> {
        self.services().into_iter().filter_map(|s| s.param.as_deref().map(str::to_string)).collect()
    }

    pub fn cond_ids(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.walk(&mut |a| {
            if let Activity::Cond(c) = a {
                out.push(c.id);
            }
        });
        out
    }

    pub fn has_clocks(&self) -> bool {
        let mut found = false;
        self.walk(&mut |a| match a {
            Activity::Atomic(at) => found |= at.clock.is_some(),
            Activity::Pick(p) => found |= p.clock.is_some(),
            _ => {}
        });
        found
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub deadline: Rat,
    pub params: Vec<String>,
    pub vars: Vec<VarDecl>,
    pub services: Vec<Service>,
    pub init: Constraint,
    pub process: Activity,
}

impl Model {
    pub fn initial_valuation(&self) -> Valuation {
        self.vars.iter().filter_map(|d| d.init.map(|v| (d.name.clone(), v))).collect()
    }

    pub fn service(&self, name: &str) -> Option<&Service> {
        self.services.iter().find(|s| s.name == name)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.deadline.is_positive() {
            return Err(ModelError::NonPositiveDeadline);
        }
        let mut seen = BTreeSet::new();
        for p in &self.params {
            if is_reserved(p) {
                return Err(ModelError::ReservedName(p.clone()));
            }
            if !seen.insert(p.clone()) {
                return Err(ModelError::Duplicate(p.clone()));
            }
        }
        let mut names = BTreeSet::new();
        for s in &self.services {
            if !names.insert(s.name.clone()) {
                return Err(ModelError::DuplicateService(s.name.clone()));
            }
            if let Some(p) = &s.param {
                if !seen.contains(p) {
                    return Err(ModelError::UnknownParam(p.clone()));
                }
            }
        }
        let mut vars = BTreeSet::new();
        for v in &self.vars {
            if !vars.insert(v.name.clone()) {
                return Err(ModelError::Duplicate(v.name.clone()));
            }
            if let Some(init) = &v.init {
                if !v.domain.contains(init) {
                    return Err(ModelError::OutOfDomain { var: v.name.clone(), value: *init });
                }
            }
        }
        for v in self.init.vars() {
            match &v {
                Var::Param(p) if seen.contains(p.as_ref()) => {}
                Var::Param(p) => return Err(ModelError::UnknownParam(p.to_string())),
                other => return Err(ModelError::NonParamInInit(other.to_string())),
            }
        }
        if self.process.has_clocks() {
            return Err(ModelError::ClockedModel);
        }
        let mut err = None;
        self.process.walk(&mut |a| {
            if err.is_some() {
                return;
            }
            err = self.check_node(a).err();
        });
        match err {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn check_service(&self, s: &ServiceRef) -> Result<(), ModelError> {
        let decl = self.service(&s.name).ok_or_else(|| ModelError::UnknownService(s.name.to_string()))?;
        if decl.param.as_deref() != s.param.as_deref() {
            return Err(ModelError::UnknownService(s.name.to_string()));
        }
        Ok(())
    }

    fn check_node(&self, a: &Activity) -> Result<(), ModelError> {
        match a {
            Activity::Atomic(at) => self.check_service(&at.service),
            Activity::Pick(p) => {
                if p.on_message.is_empty() && p.on_alarm.is_empty() {
                    return Err(ModelError::EmptyPick);
                }
                for (s, _) in &p.on_message {
                    self.check_service(s)?;
                }
                for (d, _) in &p.on_alarm {
                    if !d.is_positive() {
                        return Err(ModelError::NonPositiveAlarm(crate::constraints::fmt_rat(d)));
                    }
                }
                Ok(())
            }
            Activity::Cond(c) => match self.var(&c.guard) {
                None => Err(ModelError::UnknownVariable(c.guard.clone())),
                Some(d) if d.domain != Domain::Bool => Err(ModelError::NonBooleanGuard(c.guard.clone())),
                Some(_) => Ok(()),
            },
            Activity::Assign { var, value } => match self.var(var) {
                None => Err(ModelError::UnknownVariable(var.clone())),
                Some(d) if !d.domain.contains(value) => {
                    Err(ModelError::OutOfDomain { var: var.clone(), value: *value })
                }
                Some(_) => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Service reference as it appears in process terms.
    pub fn service_ref(&self, name: &str) -> Option<ServiceRef> {
        self.service(name).map(|s| ServiceRef::new(&s.name, s.param.as_deref()))
    }
}

/// Names the constraint syntax gives another meaning.
pub fn is_reserved(name: &str) -> bool {
    if name == "d_f" || name == "r_f" || name == "true" || name == "false" {
        return true;
    }
    match name.strip_prefix('x') {
        Some(rest) => !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()),
        None => false,
    }
}

/// Attach concrete response times to every parameterised service reference.
pub fn valuate_process(p: &Activity, pi: &ParamValuation) -> Result<Activity, ModelError> {
    let mut missing = None;
    let out = p.map_services(&mut |s| {
        let mut s = s.clone();
        if let Some(param) = &s.param {
            match pi.get(param.as_ref()) {
                Some(t) => s.time = Some(t.clone()),
                None => missing = Some(param.to_string()),
            }
        }
        s
    });
    match missing {
        Some(m) => Err(ModelError::UnknownParam(m)),
        None => Ok(out),
    }
}

/// Conjoin `p = pi(p)` for every parameter onto the initial constraint.
pub fn valuate_model(m: &Model, pi: &ParamValuation) -> Result<Model, ModelError> {
    for p in &m.params {
        match pi.get(p) {
            None => return Err(ModelError::UnknownParam(p.clone())),
            Some(v) if v.is_negative() => return Err(ModelError::NegativeParam(p.clone())),
            Some(_) => {}
        }
    }
    if let Some(extra) = pi.keys().find(|k| !m.params.contains(k)) {
        return Err(ModelError::UnknownParam(extra.clone()));
    }
    let mut init = m.init.clone();
    for p in &m.params {
        init.push(var_cmp(Var::param(p), Rel::Eq, pi[p].clone()));
    }
    Ok(Model { init, ..m.clone() })
}

/// Parameter valuation as a constraint-variable assignment.
pub fn as_assignment(pi: &ParamValuation) -> BTreeMap<Var, Rat> {
    pi.iter().map(|(k, v)| (Var::param(k), v.clone())).collect()
}

/// Zero for every parameter; handy default for tests.
pub fn zero_valuation(m: &Model) -> ParamValuation {
    m.params.iter().map(|p| (p.clone(), Rat::zero())).collect()
}
