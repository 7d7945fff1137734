//! Command dispatch for the `ltc` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ltc_core::bundled;
use ltc_core::constraints::{fmt_rat, parse_rat, simplify_dnf, NnccJson, Rat};
use ltc_core::dsl;
use ltc_core::process_model::{Model, ParamValuation};
use ltc_core::runtime::{run_experiment, ExperimentSummary, MonitorSession, RoundRecord};
use ltc_core::semantics::{build_lts, lts_to_dot, lts_to_json, Lts};
use ltc_core::synthesis::{sltc_of, synth_rltc};

#[derive(Debug, Parser)]
#[command(name = "ltc", version, about = "Timing constraints for timed service compositions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LtsFormat {
    Text,
    Json,
    Dot,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize constraints for a model.
    Synth {
        /// Model file, or the name of a bundled model.
        model: String,
        /// Print the static constraint (default).
        #[arg(long)]
        sltc: bool,
        /// Write the state space annotated with refined constraints.
        #[arg(long)]
        rltc: bool,
        /// Print the state space.
        #[arg(long)]
        lts: bool,
        /// Print state and transition counts with timings.
        #[arg(long)]
        stats: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate the runtime check at one state.
    Check {
        model: String,
        /// State id (`3` or `s3`) or a label path from the initial state,
        /// labels separated by `/`.
        state: String,
        /// Elapsed time.
        r: String,
        /// Stipulated times as `t_X=value`, comma separated.
        #[arg(long)]
        stip: String,
        #[command(flatten)]
        output: Output,
    },
    /// Run the adaptation experiment described by a JSON config.
    Simulate {
        config: PathBuf,
        /// Override the seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for `rounds.csv` and `summary.json`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print the symbolic state space.
    DumpLts {
        model: String,
        #[arg(long, value_enum, default_value_t = LtsFormat::Text)]
        format: LtsFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A model file path or a bundled model name, with or without `.svc`.
pub fn load_model(spec: &str) -> Result<Model> {
    let path = Path::new(spec);
    if path.is_file() {
        let src = fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
        return dsl::parse_model(&src).map_err(|e| anyhow!("{spec}:{e}"));
    }
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec).to_lowercase();
    bundled::load(&name).ok_or_else(|| anyhow!("no model file or bundled model named `{spec}`"))
}

/// `t_A=0.5,t_B=1/2` into a valuation.
pub fn parse_stipulation(s: &str) -> Result<ParamValuation> {
    let mut out = ParamValuation::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| anyhow!("expected NAME=VALUE, got `{part}`"))?;
        let v = parse_rat(v.trim()).ok_or_else(|| anyhow!("bad number `{v}`"))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn lts_text(lts: &Lts) -> String {
    let mut s = String::new();
    for (i, st) in lts.states.iter().enumerate() {
        s.push_str(&format!("s{i} [{:?}] C: {} | D: {} | P: {}\n", st.class, st.constraint, st.delay, st.process));
        for (label, to) in lts.successors(i) {
            s.push_str(&format!("  {label} -> s{to}\n"));
        }
    }
    s
}

#[derive(Serialize)]
struct SltcJson {
    model: String,
    cnf: String,
    dnf: String,
    satisfiable: bool,
    clauses: NnccJson,
}

#[derive(Serialize)]
struct StatsJson {
    model: String,
    states: usize,
    transitions: usize,
    lts_ms: f64,
    sltc_ms: f64,
    rltc_ms: f64,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

fn cmd_synth(model: &str, sltc: bool, rltc: bool, lts_flag: bool, stats: bool, output: &Output) -> Result<i32> {
    let m = load_model(model)?;
    let t0 = Instant::now();
    let mut lts = build_lts(&m)?;
    let lts_ms = ms(t0);
    let mut report = String::new();
    let want_sltc = sltc || !(rltc || lts_flag || stats);
    if want_sltc || stats {
        let t1 = Instant::now();
        let n = sltc_of(&lts, &m.deadline);
        let sltc_ms = ms(t1);
        if want_sltc {
            let dnf = simplify_dnf(&n);
            let sat = !dnf.is_empty();
            if !sat {
                log::warn!("static constraint of {} is unsatisfiable", m.name);
                eprintln!("warning: the constraint is unsatisfiable; no parameter valuation meets the deadline");
            }
            match output.format {
                Format::Text => report.push_str(&format!("raw CNF: {n}\nsimplified DNF: {dnf}\n")),
                Format::Json => {
                    let j = SltcJson { model: m.name.clone(), cnf: n.to_string(), dnf: dnf.to_string(), satisfiable: sat, clauses: (&n).into() };
                    report.push_str(&serde_json::to_string_pretty(&j)?);
                    report.push('\n');
                }
            }
        }
        if stats {
            let t2 = Instant::now();
            let mut copy = lts.clone();
            synth_rltc(&mut copy, &m.deadline);
            let rltc_ms = ms(t2);
            let s = StatsJson { model: m.name.clone(), states: lts.states.len(), transitions: lts.transitions.len(), lts_ms, sltc_ms, rltc_ms };
            match output.format {
                Format::Text => report.push_str(&format!(
                    "states={}, transitions={}, lts_ms={:.3}, sltc_ms={:.3}, rltc_ms={:.3}\n",
                    s.states, s.transitions, s.lts_ms, s.sltc_ms, s.rltc_ms
                )),
                Format::Json => {
                    report.push_str(&serde_json::to_string_pretty(&s)?);
                    report.push('\n');
                }
            }
        }
    }
    if rltc {
        synth_rltc(&mut lts, &m.deadline);
        report.push_str(&serde_json::to_string_pretty(&lts_to_json(&lts))?);
        report.push('\n');
    } else if lts_flag {
        match output.format {
            Format::Text => report.push_str(&lts_text(&lts)),
            Format::Json => {
                report.push_str(&serde_json::to_string_pretty(&lts_to_json(&lts))?);
                report.push('\n');
            }
        }
    }
    emit(&output.out, &report)?;
    Ok(0)
}

/// State id (`7`, `s7`) or a `/`-separated label path from the initial state.
pub fn resolve_state(lts: &Lts, spec: &str) -> Result<usize> {
    let spec = spec.trim();
    let digits = spec.strip_prefix('s').unwrap_or(spec);
    if let Ok(id) = digits.parse::<usize>() {
        if id >= lts.states.len() {
            bail!("no state s{id}; the state space has {} states", lts.states.len());
        }
        return Ok(id);
    }
    let mut at = lts.initial();
    for part in spec.split('/').map(str::trim).filter(|p| !p.is_empty()) {
        at = lts
            .successors(at)
            .find(|(l, _)| l.to_string() == part)
            .map(|(_, t)| t)
            .ok_or_else(|| anyhow!("no transition {part} from s{at}"))?;
    }
    Ok(at)
}

#[derive(Serialize)]
struct CheckJson {
    state: usize,
    elapsed: String,
    constraint: String,
    result: bool,
}

fn cmd_check(model: &str, state: &str, r: &str, stip: &str, output: &Output) -> Result<i32> {
    let m = load_model(model)?;
    let mut lts = build_lts(&m)?;
    synth_rltc(&mut lts, &m.deadline);
    let s = resolve_state(&lts, state)?;
    let r = parse_rat(r).ok_or_else(|| anyhow!("bad elapsed time `{r}`"))?;
    let pi = parse_stipulation(stip)?;
    let sess = MonitorSession::at(&lts, s, r.clone())?;
    let inst = sess.instantiated()?;
    let ok = sess.check_sat(&pi)?;
    let text = match output.format {
        Format::Text => format!("s{s} r={}: {inst}\n{}\n", fmt_rat(&r), if ok { "satisfied" } else { "violated" }),
        Format::Json => serde_json::to_string_pretty(&CheckJson { state: s, elapsed: fmt_rat(&r), constraint: inst.to_string(), result: ok })?,
    };
    emit(&output.out, &text)?;
    Ok(if ok { 0 } else { 2 })
}

/// Experiment description read by `simulate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Model file, or a bundled model name. Relative paths resolve against
    /// the config's directory first.
    pub model: String,
    /// Parameter to stipulated time; numbers or strings such as `"3/4"`.
    pub stipulation: BTreeMap<String, serde_json::Value>,
    pub rounds: usize,
    pub p_c: Vec<f64>,
    pub t_e: serde_json::Value,
    #[serde(default)]
    pub seed: u64,
}

fn rat_of(v: &serde_json::Value) -> Result<Rat> {
    let s = match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n.to_string(),
        other => bail!("expected a number, got {other}"),
    };
    parse_rat(&s).ok_or_else(|| anyhow!("bad number `{s}`"))
}

fn write_csv(path: &Path, records: &[RoundRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Load a config, resolving the model path against the config's directory.
pub fn read_config(path: &Path) -> Result<(ExperimentConfig, Model)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let beside = path.parent().map(|d| d.join(&cfg.model));
    let m = match beside.filter(|p| p.is_file()) {
        Some(p) => load_model(&p.to_string_lossy())?,
        None => load_model(&cfg.model)?,
    };
    Ok((cfg, m))
}

/// Run every threshold level of a config.
pub fn run_config(cfg: &ExperimentConfig, m: &Model) -> Result<(Vec<ExperimentSummary>, Vec<RoundRecord>)> {
    if cfg.rounds == 0 {
        bail!("at least one round is required");
    }
    let pi = cfg.stipulation.iter().map(|(k, v)| Ok((k.clone(), rat_of(v)?))).collect::<Result<ParamValuation>>()?;
    let t_e = rat_of(&cfg.t_e)?;
    let mut lts = build_lts(m)?;
    synth_rltc(&mut lts, &m.deadline);
    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for &p_c in &cfg.p_c {
        log::info!("{}: p_c = {p_c}, {} rounds", m.name, cfg.rounds);
        let (s, r) = run_experiment(m, &lts, &pi, cfg.rounds, p_c, &t_e, cfg.seed)?;
        summaries.push(s);
        rows.extend(r);
    }
    Ok((summaries, rows))
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out: &Option<PathBuf>, format: Format) -> Result<i32> {
    let (mut cfg, m) = read_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (summaries, rows) = run_config(&cfg, &m)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_csv(&dir.join("rounds.csv"), &rows)?;
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summaries)?)?;
    }
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&summaries)?,
        Format::Text => summaries
            .iter()
            .map(|s| {
                format!(
                    "{} p_c={} N_e={} N_se={} improvement={} backups={:.3} checks={:.2} check_ms={:.4} overhead_ms={:.4}",
                    s.model,
                    s.p_c,
                    s.met_without,
                    s.met_with,
                    s.improvement.map_or("n/a".to_string(), |v| format!("{v:.2}%")),
                    s.avg_backups,
                    s.avg_sat_checks,
                    s.avg_check_ms,
                    s.avg_overhead_ms
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
    };
    emit(&None, &text)?;
    Ok(0)
}

fn cmd_dump(model: &str, format: LtsFormat, out: &Option<PathBuf>) -> Result<i32> {
    let m = load_model(model)?;
    let lts = build_lts(&m)?;
    let text = match format {
        LtsFormat::Text => lts_text(&lts),
        LtsFormat::Json => serde_json::to_string_pretty(&lts_to_json(&lts))?,
        LtsFormat::Dot => lts_to_dot(&lts),
    };
    emit(out, &text)?;
    Ok(0)
}

/// Run a parsed command. Errors map to exit code 1 in the binary.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Synth { model, sltc, rltc, lts, stats, output } => cmd_synth(&model, sltc, rltc, lts, stats, &output),
        Command::Check { model, state, r, stip, output } => cmd_check(&model, &state, &r, &stip, &output),
        Command::Simulate { config, seed, out, format } => cmd_simulate(&config, seed, &out, format),
        Command::DumpLts { model, format, out } => cmd_dump(&model, format, &out),
    }
}
