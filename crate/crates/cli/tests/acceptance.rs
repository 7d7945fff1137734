//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use ltc_cli::{load_model, read_config, run_config};
use ltc_core::constraints::{
    dnf_implies, equivalent, implies_dnf, is_weaker, parse_constraint, parse_linear, parse_nncc, simplify_dnf,
    Constraint, Inequality, LinearTerm, Nncc, NnccJson, Rat, Rel, Var,
};
use ltc_core::process_model::{Model, ParamValuation};
use ltc_core::runtime::MonitorSession;
use ltc_core::semantics::{build_lts, concrete_outcomes, reached_states, Lts, Rule, StateClass};
use ltc_core::synthesis::{bind_elapsed, sltc_of, synth_rltc};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/models").join(format!("{name}.svc"))
}

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn load(name: &str) -> Model {
    load_model(&model_path(name).to_string_lossy()).expect("bundled model parses")
}

fn within(t: Duration, limit_s: f64) -> bool {
    t.as_secs_f64() < limit_s
}

/// Static constraint through the binary, compared by mutual `is_weaker`.
fn sltc_matches(name: &str, expected: &str, limit_s: f64) -> Verdict {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_ltc"))
        .args(["synth", "--sltc", "--format", "json"])
        .arg(model_path(name))
        .output()
        .expect("binary runs");
    if !out.status.success() {
        return verdict(false, format!("synth exited with {}", out.status));
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json output");
    let clauses: NnccJson = serde_json::from_value(v["clauses"].clone()).expect("clauses");
    let got = Nncc::try_from(&clauses).expect("well-formed clauses");
    let want = parse_nncc(expected).expect("expected constraint parses");
    let same = equivalent(&got, &want);
    let t = start.elapsed();
    verdict(
        same && within(t, limit_s),
        format!("equivalent={same}, {:.2}s (limit {limit_s}s), dnf: {}", t.as_secs_f64(), v["dnf"].as_str().unwrap_or("")),
    )
}

fn c1() -> Verdict {
    sltc_matches(
        "smis",
        "(t_FS < 1 && t_DS + t_FS <= 3) || (t_PS < 1 && t_FS > 1 && t_DS + t_PS <= 2) \
         || (t_PS < 1 && t_DS + t_FS <= 3 && t_DS + t_PS <= 2)",
        5.0,
    )
}

fn c2() -> Verdict {
    let v = sltc_matches("cps", "t_SS + t_LS + t_IS + t_BS <= 3", 10.0);
    let m = load("cps");
    let lts = build_lts(&m).unwrap();
    let absent = !sltc_of(&lts, &m.deadline).vars().contains(&Var::param("t_MS"));
    verdict(v.pass && absent, format!("{}; t_MS absent={absent}", v.detail))
}

fn c3() -> Verdict {
    sltc_matches("rs", "t_TS + t_WS + 2*t_DS <= 5", 10.0)
}

fn c4() -> Verdict {
    sltc_matches(
        "tbs",
        "(2*t_HSbak < t_FSbak && 2*t_FSbak < t_HSbak && t_HSbak < 1 && t_FSbak < 1) \
         || (t_HSbak < 1 && t_FSbak < 1 && t_FSbak + t_HSbak <= 1) || (t_HSbak < 1 && t_FS < 2) \
         || (t_HS < 2 && t_FSbak < 1) || (t_HS < 2 && t_FS < 2)",
        120.0,
    )
}

fn c5() -> Verdict {
    // (name, states, transitions, relative tolerance; zero means exact)
    let targets = [("smis", 14, 13, 0.0), ("cps", 120, 119, 0.10), ("rs", 85, 134, 0.10), ("tbs", 683, 3677, 0.25)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ts, tt, tol) in targets {
        let lts = build_lts(&load(name)).unwrap();
        let (s, t) = (lts.states.len(), lts.transitions.len());
        let close = |got: usize, want: usize| (got as f64 - want as f64).abs() <= tol * want as f64;
        let ok = close(s, ts) && close(t, tt);
        pass &= ok;
        parts.push(format!("{name} {s}/{t} vs {ts}/{tt} ±{}% {}", tol * 100.0, if ok { "ok" } else { "off" }));
    }
    verdict(pass, parts.join("; "))
}

fn c6() -> Verdict {
    let lts = build_lts(&load("pick")).unwrap();
    let expect = [
        ("true", "0", StateClass::NonTerminal),
        ("t_PS <= 1", "t_PS", StateClass::NonTerminal),
        ("t_PS >= 1", "1", StateClass::NonTerminal),
        ("t_PS <= 1", "t_PS", StateClass::Good),
        ("t_PS >= 1", "1", StateClass::Bad),
    ];
    if lts.states.len() != 5 {
        return verdict(false, format!("{} states", lts.states.len()));
    }
    let mut bad = Vec::new();
    for (i, (s, (c, d, class))) in lts.states.iter().zip(expect).enumerate() {
        let proj = s.constraint.project_params();
        let ok = proj.equivalent(&parse_constraint(c).unwrap()) && s.delay == parse_linear(d).unwrap() && s.class == class;
        if !ok {
            bad.push(format!("s{i}: {} / {} / {:?}", proj, s.delay, s.class));
        }
    }
    verdict(bad.is_empty(), if bad.is_empty() { "5 states match".to_string() } else { bad.join("; ") })
}

fn c7() -> Verdict {
    let m = load("smis");
    let mut lts = build_lts(&m).unwrap();
    let rltc = synth_rltc(&mut lts, &m.deadline);
    let Some(s) = lts.successors(1).find(|(l, _)| l.rules().first() == Some(&Rule::Cond2)).map(|(_, t)| t) else {
        return verdict(false, "no else branch after the first invocation");
    };
    let boxed = parse_nncc(
        "(t_FS > 1 || r_f + t_FS <= 3) && (t_FS < 1 || t_PS > 1 || r_f + t_PS <= 2) && (t_FS < 1 || t_PS < 1)",
    )
    .unwrap();
    let at_s = equivalent(&rltc[s].closed(), &boxed);
    let sltc = sltc_of(&lts, &m.deadline);
    let at_root = equivalent(&bind_elapsed(&rltc[0].closed(), &Rat::from_integer(0.into())), &sltc);
    verdict(at_s && at_root, format!("else-branch state s{s} matches={at_s}; root at r=0 matches sLTC={at_root}"))
}

fn grid(rng: &mut ChaCha8Rng, hi: &Rat) -> Rat {
    hi * Rat::new(rng.gen_range(0..=64).into(), 64.into())
}

fn env_of(pi: &ParamValuation) -> impl Fn(&Var) -> Option<Rat> + '_ {
    move |v| match v {
        Var::Param(p) => Some(pi.get(p.as_ref()).cloned().unwrap_or_else(|| Rat::from_integer(0.into()))),
        _ => None,
    }
}

/// Rejection sampling on a grid over boxes of varying size.
fn sample_where(m: &Model, rng: &mut ChaCha8Rng, want: &dyn Fn(&ParamValuation) -> bool, n: usize) -> Vec<ParamValuation> {
    let mut out = Vec::new();
    for _ in 0..200_000 {
        if out.len() == n {
            break;
        }
        let scale = [Rat::new(1.into(), 4.into()), Rat::new(1.into(), 2.into()), Rat::from_integer(1.into())][rng.gen_range(0..3)].clone();
        let hi = &m.deadline * scale;
        let pi: ParamValuation = m.params.iter().map(|p| (p.clone(), grid(rng, &hi))).collect();
        if want(&pi) {
            out.push(pi);
        }
    }
    out
}

fn c8() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["smis", "cps", "rs", "tbs"] {
        let m = load(name);
        let lts = build_lts(&m).unwrap();
        let sltc = sltc_of(&lts, &m.deadline);
        let holds = |pi: &ParamValuation| sltc.eval(&env_of(pi)) == Some(true);
        let inside = sample_where(&m, &mut rng, &holds, 200);
        let outside = sample_where(&m, &mut rng, &|pi| !holds(pi), 200);
        let mut counter = 0;
        for pi in &inside {
            let outs = concrete_outcomes(&m, pi).unwrap();
            if outs.iter().any(|(c, d)| *c != StateClass::Good || d > &m.deadline) {
                counter += 1;
            }
        }
        let violated = outside
            .iter()
            .filter(|pi| concrete_outcomes(&m, pi).unwrap().iter().any(|(c, d)| *c != StateClass::Good || d > &m.deadline))
            .count();
        let ok = inside.len() == 200 && outside.len() == 200 && counter == 0 && violated > 0;
        pass &= ok;
        parts.push(format!("{name}: {} in, {counter} counterexamples, {violated}/{} outside violate", inside.len(), outside.len()));
    }
    let t = start.elapsed();
    verdict(pass && within(t, 60.0), format!("{}; {:.2}s (limit 60s)", parts.join("; "), t.as_secs_f64()))
}

fn c9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut disagreements = 0;
    let mut checked = 0;
    let mut detail = Vec::new();
    for name in ["smis", "pick"] {
        let m = load(name);
        let lts = build_lts(&m).unwrap();
        for s in 0..lts.states.len() {
            let proj = lts.states[s].constraint.project_params();
            let member = |pi: &ParamValuation| proj.eval(&env_of(pi)) == Some(true);
            // half of the valuations drawn inside the projection
            let mut vals = sample_where(&m, &mut rng, &member, 25);
            vals.extend(sample_where(&m, &mut rng, &|_| true, 50 - vals.len()));
            for pi in &vals {
                let reached = reached_states(&m, &lts, pi).unwrap().contains(&s);
                checked += 1;
                if reached != member(pi) {
                    disagreements += 1;
                    if detail.len() < 3 {
                        detail.push(format!("{name} s{s} at {pi:?}"));
                    }
                }
            }
        }
    }
    verdict(disagreements == 0, format!("{checked} checks, {disagreements} disagreements {}", detail.join("; ")))
}

const NAMES: [&str; 3] = ["a", "b", "c"];

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

fn term() -> impl Strategy<Value = LinearTerm> {
    (prop::collection::vec(-3i64..=3, 3), -6i64..=6).prop_map(|(cs, k)| {
        LinearTerm::from_parts(cs.into_iter().enumerate().map(|(i, c)| (Var::param(NAMES[i]), rat(c, 1))), rat(k, 1))
    })
}

fn rel() -> impl Strategy<Value = Rel> {
    prop_oneof![Just(Rel::Lt), Just(Rel::Le), Just(Rel::Eq), Just(Rel::Ge), Just(Rel::Gt)]
}

fn nncc() -> impl Strategy<Value = Nncc> {
    prop::collection::vec(prop::collection::vec((term(), rel()).prop_map(|(t, r)| Inequality::new(t, r)), 1..=3), 1..=3)
        .prop_map(Nncc::from_clauses)
}

fn point() -> impl Strategy<Value = Vec<Rat>> {
    prop::collection::vec((0i64..=8).prop_map(|k| rat(k, 2)), 3)
}

fn at(p: &[Rat]) -> impl Fn(&Var) -> Option<Rat> + '_ {
    move |v| NAMES.iter().position(|n| Var::param(n) == *v).map(|i| p[i].clone())
}

fn run_property<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn c10() -> Verdict {
    let start = Instant::now();
    let fm = run_property((point(), prop::collection::vec((term(), rel(), 0i64..3), 1..=4), 0usize..3), |(p, spec, drop)| {
        // shift each conjunct so that it holds at the point
        let c = Constraint::from_conjuncts(spec.iter().map(|(t, r, slack)| {
            let v = t.eval(&at(&p)).unwrap();
            let margin = rat(*slack, 2) + if matches!(r, Rel::Lt | Rel::Gt) { rat(1, 4) } else { rat(0, 1) };
            let shift = match r {
                Rel::Eq => -v,
                Rel::Lt | Rel::Le => -v - margin,
                Rel::Ge | Rel::Gt => -v + margin,
            };
            let mut t = t.clone();
            t.add_constant(&shift);
            Inequality::new(t, *r)
        }));
        let proj = c.eliminate(&BTreeSet::from([Var::param(NAMES[drop])]));
        prop_assert_eq!(proj.eval(&at(&p)), Some(true));
        Ok(())
    });
    let neg = run_property((nncc(), point()), |(n, p)| {
        prop_assert_ne!(n.eval(&at(&p)), n.negate().eval(&at(&p)));
        Ok(())
    });
    let dnf = run_property((nncc(), prop::collection::vec(point(), 4)), |(n, pts)| {
        let d = simplify_dnf(&n);
        for p in &pts {
            prop_assert_eq!(d.eval(&at(p)), n.eval(&at(p)));
        }
        prop_assert!(implies_dnf(&n, &d) && dnf_implies(&d, &n));
        Ok(())
    });
    let pre = run_property((nncc(), nncc(), nncc()), |(x, y, z)| {
        prop_assert!(is_weaker(&x, &x));
        if is_weaker(&x, &y) && is_weaker(&y, &z) {
            prop_assert!(is_weaker(&x, &z));
        }
        Ok(())
    });
    let t = start.elapsed();
    let results = [("fm", fm), ("negate", neg), ("simplify_dnf", dnf), ("is_weaker", pre)];
    let failed: Vec<String> = results.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    verdict(
        failed.is_empty() && within(t, 30.0),
        format!("4 x 1000 cases, {} failures, {:.2}s (limit 30s) {}", failed.len(), t.as_secs_f64(), failed.join("; ")),
    )
}

fn c11() -> Verdict {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for file in ["exp2-smis.json", "exp2-cps.json"] {
        let (cfg, m) = read_config(&config_path(file)).unwrap();
        assert_eq!(cfg.rounds, 2000);
        let (sums, _) = run_config(&cfg, &m).unwrap();
        let by_pc: BTreeMap<String, (f64, f64)> = sums
            .iter()
            .map(|s| (format!("{:.1}", s.p_c), (s.improvement.unwrap_or(f64::NAN), s.avg_backups)))
            .collect();
        let imp = |k: &str| by_pc[k].0;
        let nonneg = by_pc.values().all(|(i, _)| *i >= 0.0);
        let rising = imp("0.6") > imp("0.9");
        let backups: Vec<f64> = ["0.9", "0.8", "0.7", "0.6"].iter().map(|k| by_pc[*k].1).collect();
        let monotone = backups.windows(2).all(|w| w[1] >= w[0]);
        let ok = nonneg && rising && monotone;
        pass &= ok;
        parts.push(format!(
            "{}: improvement {} backups {}",
            m.name,
            ["0.9", "0.8", "0.7", "0.6"].iter().map(|k| format!("{:.2}%", imp(k))).collect::<Vec<_>>().join("/"),
            backups.iter().map(|b| format!("{b:.3}")).collect::<Vec<_>>().join("/")
        ));
    }
    let t = start.elapsed();
    verdict(pass && within(t, 120.0), format!("{}; {:.2}s (limit 120s)", parts.join("; "), t.as_secs_f64()))
}

fn c12() -> Verdict {
    let m = load("smis");
    let mut lts: Lts = build_lts(&m).unwrap();
    synth_rltc(&mut lts, &m.deadline);
    let stip: ParamValuation = [("t_DS", rat(3, 2)), ("t_FS", rat(1, 2)), ("t_PS", rat(4, 5))].into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let calls = 1000;
    let mut total = Duration::ZERO;
    for _ in 0..calls {
        let s = rng.gen_range(0..lts.states.len());
        let r = rat(rng.gen_range(0..=300), 100);
        let sess = MonitorSession::at(&lts, s, r).unwrap();
        let t0 = Instant::now();
        sess.check_sat(&stip).unwrap();
        total += t0.elapsed();
    }
    let avg_ms = total.as_secs_f64() * 1000.0 / calls as f64;
    verdict(avg_ms < 50.0, format!("{calls} calls, {avg_ms:.4} ms per call (limit 50 ms)"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("SMIS static constraint", c1),
        ("CPS static constraint", c2),
        ("RS static constraint", c3),
        ("TBS static constraint", c4),
        ("state space sizes", c5),
        ("pick model golden states", c6),
        ("SMIS refined constraints", c7),
        ("soundness sampling", c8),
        ("reachability condition", c9),
        ("constraint engine properties", c10),
        ("adaptation trend", c11),
        ("check cost", c12),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = f();
        println!("criterion {:>2} {}: {} ({})", i + 1, if v.pass { "PASS" } else { "FAIL" }, name, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
