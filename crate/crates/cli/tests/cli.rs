use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ltc_cli::{load_model, parse_stipulation};
use ltc_core::dsl::parse_model;

fn ltc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ltc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

const STIP: &str = "t_FS=0.5,t_PS=0.5,t_DS=1.5";

#[test]
fn sltc_prints_three_terms_for_smis() {
    let o = ltc(&["synth", "--sltc", "smis"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let dnf = text.lines().find_map(|l| l.strip_prefix("simplified DNF: ")).unwrap();
    assert_eq!(dnf.matches(" || ").count(), 2, "{dnf}");
    assert!(text.starts_with("raw CNF: "));
}

#[test]
fn stats_report_counts() {
    let o = ltc(&["synth", "--stats", "cps"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("states=109, transitions=112"), "{}", stdout(&o));
}

#[test]
fn only_bad_terminals_give_an_unsatisfiable_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("doomed.svc");
    fs::write(&path, "model Doomed; deadline 1; svc User; process { reply(User) bad }").unwrap();
    let o = ltc(&["synth", "--sltc", path.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["satisfiable"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unsatisfiable"));
}

#[test]
fn check_exit_codes() {
    assert_eq!(ltc(&["check", "smis", "3", "1.5", "--stip", STIP]).status.code(), Some(0));
    assert_eq!(ltc(&["check", "smis", "s3", "2.8", "--stip", STIP]).status.code(), Some(2));
    assert_eq!(ltc(&["check", "smis", "<rSInv,rSeq2>/<rCond2>", "2.8", "--stip", STIP]).status.code(), Some(2));
    assert_eq!(ltc(&["check", "smis", "42", "1", "--stip", STIP]).status.code(), Some(1));
    assert_eq!(ltc(&["check", "smis", "<rReply>", "1", "--stip", STIP]).status.code(), Some(1));
}

#[test]
fn check_prints_the_bound_constraint() {
    let o = ltc(&["check", "smis", "3", "1.5", "--stip", STIP, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"], true);
    assert_eq!(v["elapsed"], "3/2");
    assert!(!v["constraint"].as_str().unwrap().contains("r_f"));
}

fn write_config(dir: &Path, rounds: usize, p_c: &[f64]) -> PathBuf {
    let path = dir.join("cfg.json");
    let cfg = serde_json::json!({
        "model": "smis",
        "stipulation": { "t_DS": 1.5, "t_FS": "1/2", "t_PS": 0.8 },
        "rounds": rounds,
        "p_c": p_c,
        "t_e": 1,
        "seed": 5
    });
    fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn simulate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 100, &[0.9, 0.6]);
    let out = dir.path().join("out");
    let o = ltc(&["simulate", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("rounds.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 3 * 100);
    assert!(rows.starts_with("p_c,round,mode,outcome,total,overhead_ms,sat_checks,sat_time_ms,backups"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 2);
    for s in summary.as_array().unwrap() {
        assert!(s["improvement"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn simulate_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0, &[0.9]);
    assert_eq!(ltc(&["simulate", cfg.to_str().unwrap()]).status.code(), Some(1));
    let cfg = write_config(dir.path(), 200, &[1.0]);
    let o = ltc(&["simulate", cfg.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["improvement"], 0.0);
    assert_eq!(v[0]["avg_backups"], 0.0);
}

#[test]
fn bundled_smis_config_improves_at_every_level() {
    let o = ltc(&["simulate", configs().join("exp2-smis.json").to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    for s in v.as_array().unwrap() {
        assert!(s["improvement"].as_f64().unwrap() >= 0.0, "{s}");
        assert_eq!(s["seed"], 9);
    }
}

#[test]
fn output_is_deterministic() {
    let a = ltc(&["dump-lts", "tbs", "--format", "json"]);
    let b = ltc(&["dump-lts", "tbs", "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let dot = stdout(&ltc(&["dump-lts", "pick", "--format", "dot"]));
    assert!(dot.starts_with("digraph"));
    assert_eq!(dot.matches("->").count(), 4);
}

#[test]
fn rltc_export_annotates_every_state() {
    let o = ltc(&["synth", "--rltc", "smis"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let states = v["states"].as_array().unwrap();
    assert_eq!(states.len(), 14);
    assert!(states.iter().all(|s| s["rltc"].is_string()));
}

#[test]
fn model_loading() {
    assert!(load_model("smis").is_ok());
    assert!(load_model("models/SMIS.svc").is_ok());
    assert!(load_model("nope").is_err());
    assert!(parse_model("").is_err());
    let err = parse_model("model M; deadline 1; svc U; process { pick { } }").unwrap_err();
    assert!(err.to_string().contains("pick"), "{err}");
    assert!(parse_stipulation("t_A=0.5, t_B=1/3").unwrap().len() == 2);
    assert!(parse_stipulation("t_A").is_err());
}
