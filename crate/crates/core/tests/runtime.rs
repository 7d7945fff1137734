use std::collections::BTreeMap;

use ltc_core::bundled;
use ltc_core::constraints::{parse_rat, Rat};
use ltc_core::process_model::ParamValuation;
use ltc_core::runtime::{
    run_experiment, simulate_round, ExecutionConfig, MonitorError, MonitorSession, Mode, Outcome, RuntimeError,
};
use ltc_core::semantics::{build_lts, Label, Lts, Rule, StateClass};
use ltc_core::synthesis::synth_rltc;

fn q(s: &str) -> Rat {
    parse_rat(s).unwrap()
}

fn pi(pairs: &[(&str, &str)]) -> ParamValuation {
    pairs.iter().map(|(k, v)| (k.to_string(), q(v))).collect()
}

fn annotated(name: &str) -> (ltc_core::process_model::Model, Lts) {
    let m = bundled::load(name).unwrap();
    let mut lts = build_lts(&m).unwrap();
    synth_rltc(&mut lts, &m.deadline);
    (m, lts)
}

fn else_state(lts: &Lts) -> usize {
    lts.successors(1).find(|(l, _)| l.rules().first() == Some(&Rule::Cond2)).map(|(_, t)| t).unwrap()
}

#[test]
fn check_after_branching() {
    let (_, lts) = annotated("smis");
    let s = else_state(&lts);
    let stip = pi(&[("t_FS", "0.5"), ("t_PS", "0.5"), ("t_DS", "1.5")]);
    assert!(MonitorSession::at(&lts, s, q("1.5")).unwrap().check_sat(&stip).unwrap());
    assert!(!MonitorSession::at(&lts, s, q("2.8")).unwrap().check_sat(&stip).unwrap());
    let zeros = pi(&[("t_FS", "0"), ("t_PS", "0"), ("t_DS", "0")]);
    assert!(MonitorSession::new(&lts).check_sat(&zeros).unwrap());
}

#[test]
fn check_at_good_terminal_within_deadline() {
    let (m, lts) = annotated("smis");
    let stip = pi(&[("t_FS", "0.5"), ("t_PS", "0.5"), ("t_DS", "1.5")]);
    for t in lts.terminals().filter(|&t| lts.states[t].class == StateClass::Good) {
        let sess = MonitorSession::at(&lts, t, m.deadline.clone()).unwrap();
        assert!(sess.check_sat(&stip).unwrap(), "s{t}");
    }
}

#[test]
fn monitor_rejects_bad_input() {
    let (_, lts) = annotated("smis");
    let mut sess = MonitorSession::new(&lts);
    let wrong = Label(vec![Rule::Reply]);
    assert!(matches!(sess.advance(&wrong, &q("0")), Err(MonitorError::NoSuchEdge { .. })));
    let first = lts.successors(0).next().unwrap().0.clone();
    assert!(matches!(sess.advance(&first, &q("-1")), Err(MonitorError::NegativeStep(_))));
    sess.advance(&first, &q("1.5")).unwrap();
    assert_eq!(sess.active(), 1);
    assert_eq!(sess.elapsed(), &q("1.5"));
    assert!(matches!(MonitorSession::at(&lts, 99, q("0")), Err(MonitorError::NoSuchState(99))));
    let plain = build_lts(&bundled::load("smis").unwrap()).unwrap();
    assert!(matches!(MonitorSession::new(&plain).check_sat(&ParamValuation::new()), Err(MonitorError::NotAnnotated(0))));
}

fn config(times: &[(&str, &str)]) -> ExecutionConfig {
    ExecutionConfig {
        branches: BTreeMap::new(),
        times: times.iter().map(|(k, v)| (k.to_string(), q(v))).collect(),
        backups: BTreeMap::new(),
    }
}

#[test]
fn fast_reply_meets_the_deadline() {
    let (m, lts) = annotated("smis");
    let stip = pi(&[("t_DS", "1.5"), ("t_FS", "0.5"), ("t_PS", "0.8")]);
    let e = config(&[("DS", "0.5"), ("FS", "0.4"), ("PS", "0.1")]);
    let r = simulate_round(&m, &lts, &stip, &e, Mode::Rr).unwrap();
    assert_eq!(r.outcome, Outcome::Met);
    assert_eq!(r.total, q("0.9"));
    assert_eq!(r.trace, ["<rSInv,rSeq2>", "<rCond2>", "<rAInv,rSeq2>", "<(rPickM,1)>", "<rReply>"]);
    assert_eq!(r.backups_used, 0);
}

#[test]
fn slow_services_end_bad_without_adaptation() {
    let (m, lts) = annotated("smis");
    let stip = pi(&[("t_DS", "1.5"), ("t_FS", "0.5"), ("t_PS", "0.8")]);
    let e = config(&[("DS", "0.5"), ("FS", "1.2"), ("PS", "1.3")]);
    let none = simulate_round(&m, &lts, &stip, &e, Mode::None).unwrap();
    assert_eq!((none.class, none.outcome), (StateClass::Bad, Outcome::Missed));
    let inst = simulate_round(&m, &lts, &stip, &e, Mode::Instrument).unwrap();
    assert_eq!(inst.trace, none.trace);
    assert_eq!(inst.backups_used, 0);
}

#[test]
fn failed_check_swaps_in_the_backup() {
    let (m, lts) = annotated("smis");
    let stip = pi(&[("t_DS", "1.5"), ("t_FS", "0.5"), ("t_PS", "0.8")]);
    let mut e = config(&[("DS", "2.6"), ("FS", "0.9"), ("PS", "0.3")]);
    e.backups = [("FS", "0.1"), ("PS", "0.1"), ("DS", "0.1")].iter().map(|(k, v)| (k.to_string(), q(v))).collect();
    let none = simulate_round(&m, &lts, &stip, &e, Mode::None).unwrap();
    assert_eq!(none.outcome, Outcome::Missed);
    let rr = simulate_round(&m, &lts, &stip, &e, Mode::Rr).unwrap();
    assert_eq!(rr.backups_used, 1);
    assert_eq!(rr.outcome, Outcome::Met);
    assert_eq!(rr.total, q("2.7"));
}

#[test]
fn rounds_are_deterministic() {
    let (m, lts) = annotated("cps");
    let stip = pi(&[("t_SS", "0.75"), ("t_LS", "0.75"), ("t_BS", "0.75"), ("t_IS", "0.75"), ("t_MS", "1")]);
    let (a, ra) = run_experiment(&m, &lts, &stip, 50, 0.7, &q("1"), 3).unwrap();
    let (b, rb) = run_experiment(&m, &lts, &stip, 50, 0.7, &q("1"), 3).unwrap();
    assert_eq!((a.met_with, a.met_without, a.avg_backups), (b.met_with, b.met_without, b.avg_backups));
    let outcomes = |r: &[ltc_core::runtime::RoundRecord]| r.iter().map(|x| (x.outcome, x.total, x.backups)).collect::<Vec<_>>();
    assert_eq!(outcomes(&ra), outcomes(&rb));
}

#[test]
fn experiment_edge_cases() {
    let (m, lts) = annotated("smis");
    let stip = pi(&[("t_DS", "1.5"), ("t_FS", "0.5"), ("t_PS", "0.8")]);
    assert!(matches!(run_experiment(&m, &lts, &stip, 0, 0.9, &q("1"), 1), Err(RuntimeError::NoRounds)));
    assert!(matches!(run_experiment(&m, &lts, &stip, 5, 1.5, &q("1"), 1), Err(RuntimeError::BadThreshold(_))));
    let (s, _) = run_experiment(&m, &lts, &stip, 300, 1.0, &q("1"), 1).unwrap();
    assert_eq!(s.met_without, 300);
    assert_eq!(s.improvement, Some(0.0));
    assert_eq!(s.avg_backups, 0.0);
}

#[test]
fn adaptation_never_loses_rounds() {
    let (m, lts) = annotated("smis");
    let stip = pi(&[("t_DS", "1.5"), ("t_FS", "0.5"), ("t_PS", "0.8")]);
    for p_c in [0.9, 0.6] {
        let (s, _) = run_experiment(&m, &lts, &stip, 400, p_c, &q("1"), 11).unwrap();
        assert!(s.met_with >= s.met_without, "{p_c}: {s:?}");
    }
}
