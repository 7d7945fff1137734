use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{int, Rat};
use crate::process_model::{Activity, Model, ParamValuation, ServiceRef};
use crate::semantics::{concrete_successors, ConcreteState, Rule, StateClass};
use crate::semantics::{activate, Lts};

use super::monitor::{MonitorError, MonitorSession};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("at least one round is required")]
    NoRounds,
    #[error("conformance threshold {0} is outside [0, 1]")]
    BadThreshold(f64),
    #[error("exceeding threshold must be nonnegative")]
    NegativeExcess,
    #[error("no stipulated time for `{0}`")]
    MissingStipulation(String),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

/// One simulated scenario: branch choices and response times.
#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionConfig {
    /// Conditional id to branch (`true` for then). Missing ids take the else branch.
    pub branches: BTreeMap<u32, bool>,
    /// Service name to response time.
    pub times: BTreeMap<String, Rat>,
    /// Service name to backup response time.
    pub backups: BTreeMap<String, Rat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// No monitor.
    None,
    /// Monitor and checks, original services kept.
    Instrument,
    /// Monitor, checks, and backups on failed checks.
    Rr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Met,
    Missed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundMetrics {
    pub outcome: Outcome,
    pub class: StateClass,
    pub total: Rat,
    pub sat_checks: u32,
    pub sat_time: Duration,
    pub backups_used: u32,
    pub wall: Duration,
    pub trace: Vec<String>,
}

const STEPS: i64 = 1000;

/// Memo of check results for one stipulation. A state's refined constraint
/// mentions the elapsed time only on the left of deadline comparisons, so
/// its truth can only flip from true to false as the elapsed time grows.
/// Per state we keep the largest elapsed time known to pass and the
/// smallest known to fail; anything in between is computed.
#[derive(Clone, Debug, Default)]
pub struct CheckCache {
    bounds: HashMap<usize, (Option<Rat>, Option<Rat>)>,
    /// Checks answered without solving.
    pub hits: u64,
    /// Checks that ran the solver.
    pub misses: u64,
}

impl CheckCache {
    pub fn new() -> CheckCache {
        CheckCache::default()
    }

    pub fn check(&mut self, sess: &MonitorSession, pi: &ParamValuation) -> Result<bool, MonitorError> {
        let r = sess.elapsed();
        let entry = self.bounds.entry(sess.active()).or_insert((None, None));
        if entry.0.as_ref().is_some_and(|ok| r <= ok) {
            self.hits += 1;
            return Ok(true);
        }
        if entry.1.as_ref().is_some_and(|bad| r >= bad) {
            self.hits += 1;
            return Ok(false);
        }
        self.misses += 1;
        let ok = sess.check_sat(pi)?;
        if ok {
            entry.0 = Some(r.clone());
        } else {
            entry.1 = Some(r.clone());
        }
        Ok(ok)
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: &Rat, hi: &Rat, open_low: bool) -> Rat {
    let k = if open_low { rng.gen_range(1..=STEPS) } else { rng.gen_range(0..=STEPS) };
    lo + (hi - lo) * Rat::new(k.into(), STEPS.into())
}

/// Draw an execution configuration. Each service meets its stipulated
/// time with probability `p_c`; otherwise it overshoots by at most `t_e`.
/// Backups take at most half the stipulated time.
pub fn sample_config(m: &Model, pi: &ParamValuation, p_c: f64, t_e: &Rat, rng: &mut ChaCha8Rng) -> Result<ExecutionConfig, RuntimeError> {
    let mut times = BTreeMap::new();
    let mut backups = BTreeMap::new();
    for s in &m.services {
        let Some(p) = &s.param else { continue };
        let stip = pi.get(p).ok_or_else(|| RuntimeError::MissingStipulation(p.clone()))?;
        let t = if rng.gen_bool(p_c) {
            uniform(rng, &Rat::zero(), stip, false)
        } else {
            uniform(rng, stip, &(stip + t_e), true)
        };
        times.insert(s.name.clone(), t);
        backups.insert(s.name.clone(), uniform(rng, &Rat::zero(), &(stip / int(2)), false));
    }
    let branches = m.process.cond_ids().into_iter().map(|id| (id, rng.gen_bool(0.5))).collect();
    Ok(ExecutionConfig { branches, times, backups })
}

fn new_invocations(activated: &Activity, fresh: u32) -> Vec<String> {
    let mut out = Vec::new();
    activated.walk(&mut |a| {
        if let Activity::Atomic(at) = a {
            if at.clock == Some(fresh) && at.kind.is_invocation() {
                out.push(at.service.name.to_string());
            }
        }
    });
    out
}

fn fresh_of(p: &Activity) -> u32 {
    let used = crate::semantics::active_clocks(p);
    (0..).find(|x| !used.contains(x)).expect("unbounded")
}

/// Walk one execution. In monitored modes the active state is tracked and
/// checked before every invocation; in `Rr` mode a failed check swaps in
/// the backup service for that invocation.
pub fn simulate_round(
    m: &Model,
    annotated: &Lts,
    pi_stip: &ParamValuation,
    e: &ExecutionConfig,
    mode: Mode,
) -> Result<RoundMetrics, RuntimeError> {
    simulate_round_cached(m, annotated, pi_stip, e, mode, &mut CheckCache::new())
}

/// As [`simulate_round`], answering checks through a shared memo.
pub fn simulate_round_cached(
    m: &Model,
    annotated: &Lts,
    pi_stip: &ParamValuation,
    e: &ExecutionConfig,
    mode: Mode,
    cache: &mut CheckCache,
) -> Result<RoundMetrics, RuntimeError> {
    let start = Instant::now();
    let mut times = e.times.clone();
    let mut session = match mode {
        Mode::None => None,
        _ => Some(MonitorSession::new(annotated)),
    };
    let mut state = ConcreteState::initial(m, m.process.clone());
    let mut sat_checks = 0;
    let mut sat_time = Duration::ZERO;
    let mut backups_used = 0;
    let mut bad = false;
    let mut trace = Vec::new();
    loop {
        if let Some(sess) = &session {
            let fresh = fresh_of(&state.process);
            let activated = activate(&state.process, fresh);
            for name in new_invocations(&activated, fresh) {
                let t0 = Instant::now();
                let ok = cache.check(sess, pi_stip)?;
                sat_time += t0.elapsed();
                sat_checks += 1;
                if !ok && mode == Mode::Rr {
                    if let Some(b) = e.backups.get(&name) {
                        times.insert(name.clone(), b.clone());
                        backups_used += 1;
                    }
                }
            }
        }
        let resolve = |s: &ServiceRef| times.get(s.name.as_ref()).cloned().unwrap_or_else(Rat::zero);
        let steps = concrete_successors(&state, &resolve);
        let chosen = steps.into_iter().find(|st| match (st.cond, st.label.rules().first()) {
            (Some((id, then)), Some(Rule::Cond1 | Rule::Cond2)) => e.branches.get(&id).copied().unwrap_or(false) == then,
            _ => true,
        });
        let Some(step) = chosen else { break };
        if let Some(sess) = &mut session {
            sess.advance(&step.label, &step.delta)?;
        }
        trace.push(step.label.to_string());
        bad = step.bad;
        state = step.state;
    }
    let class = if bad { StateClass::Bad } else { StateClass::Good };
    let outcome = if class == StateClass::Good && state.elapsed <= m.deadline { Outcome::Met } else { Outcome::Missed };
    Ok(RoundMetrics { outcome, class, total: state.elapsed, sat_checks, sat_time, backups_used, wall: start.elapsed(), trace })
}

/// Per-round row for CSV export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundRecord {
    pub p_c: f64,
    pub round: usize,
    pub mode: Mode,
    pub outcome: Outcome,
    pub total: f64,
    pub overhead_ms: f64,
    pub sat_checks: u32,
    pub sat_time_ms: f64,
    pub backups: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub model: String,
    pub p_c: f64,
    pub t_e: f64,
    pub rounds: usize,
    pub seed: u64,
    /// Mean of instrumented minus unmonitored wall time, milliseconds.
    pub avg_overhead_ms: f64,
    /// Mean number of checks per monitored round.
    pub avg_sat_checks: f64,
    /// Mean check time per round, milliseconds.
    pub avg_sat_time_ms: f64,
    /// Mean time of one check, milliseconds.
    pub avg_check_ms: f64,
    /// Rounds meeting the deadline without adaptation.
    pub met_without: usize,
    /// Rounds meeting the deadline with adaptation.
    pub met_with: usize,
    /// `(met_with - met_without) * 100 / met_without`; absent when no
    /// unadapted round met the deadline.
    pub improvement: Option<f64>,
    pub avg_backups: f64,
    /// Checks that ran the solver rather than the memo.
    pub solver_checks: u64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Paired rounds on identical configurations: unmonitored, instrumented
/// with original services, and adaptive.
pub fn run_experiment(
    m: &Model,
    annotated: &Lts,
    pi_stip: &ParamValuation,
    rounds: usize,
    p_c: f64,
    t_e: &Rat,
    seed: u64,
) -> Result<(ExperimentSummary, Vec<RoundRecord>), RuntimeError> {
    if rounds == 0 {
        return Err(RuntimeError::NoRounds);
    }
    if !(0.0..=1.0).contains(&p_c) {
        return Err(RuntimeError::BadThreshold(p_c));
    }
    if t_e.is_negative() {
        return Err(RuntimeError::NegativeExcess);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(rounds * 3);
    let (mut overhead, mut sat_time) = (0.0, Duration::ZERO);
    let (mut checks, mut backups) = (0u64, 0u64);
    let (mut met_without, mut met_with) = (0, 0);
    let mut cache = CheckCache::new();
    for round in 0..rounds {
        let e = sample_config(m, pi_stip, p_c, t_e, &mut rng)?;
        let none = simulate_round(m, annotated, pi_stip, &e, Mode::None)?;
        let inst = simulate_round_cached(m, annotated, pi_stip, &e, Mode::Instrument, &mut cache)?;
        let rr = simulate_round_cached(m, annotated, pi_stip, &e, Mode::Rr, &mut cache)?;
        debug_assert_eq!(none.trace, inst.trace);
        let o = ms(inst.wall) - ms(none.wall);
        overhead += o;
        checks += u64::from(inst.sat_checks);
        sat_time += inst.sat_time;
        backups += u64::from(rr.backups_used);
        met_without += usize::from(none.outcome == Outcome::Met);
        met_with += usize::from(rr.outcome == Outcome::Met);
        for (mode, r, oh) in [(Mode::None, &none, 0.0), (Mode::Instrument, &inst, o), (Mode::Rr, &rr, ms(rr.wall) - ms(none.wall))] {
            records.push(RoundRecord {
                p_c,
                round,
                mode,
                outcome: r.outcome,
                total: to_f64(&r.total),
                overhead_ms: oh,
                sat_checks: r.sat_checks,
                sat_time_ms: ms(r.sat_time),
                backups: r.backups_used,
            });
        }
    }
    let k = rounds as f64;
    let summary = ExperimentSummary {
        model: m.name.clone(),
        p_c,
        t_e: to_f64(t_e),
        rounds,
        seed,
        avg_overhead_ms: overhead / k,
        avg_sat_checks: checks as f64 / k,
        avg_sat_time_ms: ms(sat_time) / k,
        avg_check_ms: if checks == 0 { 0.0 } else { ms(sat_time) / checks as f64 },
        met_without,
        met_with,
        improvement: (met_without > 0)
            .then(|| (met_with as f64 - met_without as f64) * 100.0 / met_without as f64),
        avg_backups: backups as f64 / k,
        solver_checks: cache.misses,
    };
    Ok((summary, records))
}
