//! `bounty`: evaluate, optimize, sweep, verify and simulate bug bounty
//! scenarios from the command line.
//!
//! Exit codes: 0 on success (including defined negative results such as
//! "no viable program"), 1 when verification fails, 2 on bad input.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bounty_core::io::ScenarioFile;
use bounty_core::sim::{expected_outcome, simulate, simulate_with_trace, SimMode};
use bounty_core::vendor::{
    condition1, optimal_release_no_bbp, optimal_release_with_bbp, optimal_whh_count,
    profit_with_bbp, profit_without_bbp,
};
use bounty_core::verify::{run_suite, SuiteConfig, DEFAULT_SEED};
use bounty_core::{Error, HackerStage, VendorDecision};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(
    name = "bounty",
    version,
    about = "Bug bounty program economics: equilibria, optima and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hacker efforts, success probabilities and vendor profit at one decision.
    Evaluate { scenario: PathBuf },
    /// Optimal release time and bounties with and without a program.
    Optimize {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = OptimizeMode::Both)]
        mode: OptimizeMode,
    },
    /// Evaluate every point of the scenario's sweep block and write CSV.
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the randomized verification suite.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override a check tolerance, as `name=value`. For testing the
        /// failure path.
        #[arg(long = "tolerance", hide = true, value_parser = parse_override)]
        tolerances: Vec<(String, f64)>,
    },
    /// Monte Carlo simulation of one release.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::WithBbp)]
        mode: ModeArg,
        /// Also write one CSV row per trial.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptimizeMode {
    WithBbp,
    NoBbp,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    WithBbp,
    WithoutBbp,
}

impl From<ModeArg> for SimMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WithBbp => SimMode::WithBbp,
            ModeArg::WithoutBbp => SimMode::WithoutBbp,
        }
    }
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let value = value.parse::<f64>().map_err(|e| e.to_string())?;
    Ok((name.to_string(), value))
}

/// A command failure and the exit code it maps to.
enum Failure {
    Input(Value),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(error_json(&e))
    }
}

fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::Domain(_) => "domain",
        Error::SingularParameter(_) => "singular-parameter",
        Error::NonConvergence { .. } => "non-convergence",
        Error::NonConcave { .. } => "non-concave",
        Error::NoViableProgram(_) => "no-viable-program",
        Error::Infeasible(_) => "infeasible",
        Error::InvalidScenario(_) => "invalid-scenario",
    };
    json!({ "error": kind, "message": e.to_string() })
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Input(json!({ "error": "io", "message": format!("{}: {e}", path.display()) }))
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    let mut out = io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| io_failure(Path::new("<stdout>"), e))
}

/// Loads and validates a scenario; validation failures are input errors.
fn load(path: &Path) -> Result<(ScenarioFile, Vec<String>), Failure> {
    let scenario = ScenarioFile::from_path(path)?;
    let report = scenario.validate();
    if !report.passed() {
        return Err(Failure::Input(json!({
            "error": "invalid-scenario",
            "message": format!("{} failed validation", path.display()),
            "violations": report.violations,
        })));
    }
    Ok((scenario, report.warnings))
}

/// The decision to evaluate at: the file's, or the optimal program if the
/// file has none (the no-program optimum with zero bounties when no
/// program is viable).
fn resolve_decision(s: &ScenarioFile) -> Result<(VendorDecision, Option<String>), Failure> {
    if let Some(d) = s.decision {
        return Ok((d, None));
    }
    match optimal_release_with_bbp(&s.market, &s.curves) {
        Ok(o) => Ok((
            VendorDecision::new(o.t, o.p_s, o.p_ns),
            Some("no decision block: evaluated at the optimal release time and bounties".into()),
        )),
        Err(Error::NoViableProgram(msg)) => {
            let nb = optimal_release_no_bbp(&s.market, &s.curves)?;
            Ok((
                VendorDecision::new(nb.t, 0.0, 0.0),
                Some(format!(
                    "no decision block and no viable program ({msg}): evaluated at the no-program optimum with zero bounties"
                )),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn evaluate(path: &Path) -> Result<(), Failure> {
    let (s, warnings) = load(path)?;
    let (decision, note) = resolve_decision(&s)?;
    let stage = HackerStage::new(&s.market, &decision, &s.curves);
    let efforts = stage.equilibrium()?;
    let success = stage.success_probabilities(&efforts);
    let report = json!({
        "decision": decision,
        "note": note,
        "warnings": warnings,
        "regime": stage.select_regime(),
        "efforts": efforts,
        "success": success,
        "condition1": condition1(&s.market, &s.curves, decision.t)?,
        "profit_with_bbp": profit_with_bbp(&s.market, &decision, &s.curves),
        "profit_without_bbp": profit_without_bbp(&s.market, decision.t, &s.curves),
    });
    print_json(&report)
}

/// A defined non-result of an optimizer, reported instead of failing.
fn outcome_json(e: &Error) -> Result<Value, Failure> {
    match e {
        Error::NoViableProgram(_) | Error::NonConcave { .. } => Ok(error_json(e)),
        _ => Err(Failure::Input(error_json(e))),
    }
}

fn optimize(path: &Path, mode: OptimizeMode) -> Result<(), Failure> {
    let (s, warnings) = load(path)?;
    let (p, c) = (&s.market, &s.curves);
    let mut report = json!({ "warnings": warnings });

    let no_bbp = if mode != OptimizeMode::WithBbp {
        match optimal_release_no_bbp(p, c) {
            Ok(o) => {
                report["no_bbp"] = json!({
                    "optimum": o,
                    "breakdown": profit_without_bbp(p, o.t, c),
                    "release_gap": bounty_core::vendor::release_gap_term(p, c, o.t),
                });
                Some(o)
            }
            Err(e) => {
                report["no_bbp"] = outcome_json(&e)?;
                None
            }
        }
    } else {
        None
    };

    if mode != OptimizeMode::NoBbp {
        match optimal_release_with_bbp(p, c) {
            Ok(o) => {
                let decision = VendorDecision::new(o.t, o.p_s, o.p_ns);
                report["with_bbp"] = json!({
                    "optimum": o,
                    "profit": profit_with_bbp(p, &decision, c),
                    "condition1": condition1(p, c, o.t)?,
                    "whh_count": optimal_whh_count(p, c, o.t)?,
                });
                if let Some(nb) = &no_bbp {
                    report["comparison"] = json!({
                        "t_with_bbp": o.t,
                        "t_no_bbp": nb.t,
                        "earlier_with_bbp": o.t < nb.t,
                        "profit_gain": o.profit - nb.profit,
                        "both_interior": o.interior && nb.interior,
                    });
                }
            }
            Err(e) => {
                report["with_bbp"] = outcome_json(&e)?;
                let t = no_bbp.as_ref().map_or(0.0, |o| o.t);
                report["condition1_at_t0"] = json!(condition1(p, c, 0.0)?);
                report["whh_count"] = json!(optimal_whh_count(p, c, t)?);
            }
        }
    }
    print_json(&report)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: f64,
    t: f64,
    p_s: f64,
    p_ns: f64,
    regime: String,
    alpha_s: f64,
    alpha_ns: f64,
    beta_ns: f64,
    mu_s: f64,
    p_e_s: f64,
    p_e_ns: f64,
    p_ne_ns: f64,
    p_b_s: f64,
    clipped: bool,
    condition1_feasible: bool,
    profit_with_bbp: f64,
    profit_without_bbp: f64,
    n_eq26: f64,
    n_quadratic: f64,
    n_bruteforce: u32,
}

fn sweep(path: &Path, out: &Path) -> Result<(), Failure> {
    let (s, _) = load(path)?;
    let spec = s.sweep.clone().ok_or_else(|| {
        Failure::from(Error::InvalidScenario("scenario has no sweep block".into()))
    })?;
    let points = s.sweep_points()?;
    let mut rows = Vec::with_capacity(points.len());
    for (value, point) in &points {
        let report = point.validate();
        if !report.passed() {
            return Err(Failure::Input(json!({
                "error": "invalid-scenario",
                "message": format!("sweep point {} = {value} failed validation", spec.parameter),
                "violations": report.violations,
            })));
        }
        let (p, c) = (&point.market, &point.curves);
        let (d, _) = resolve_decision(point)?;
        let stage = HackerStage::new(p, &d, c);
        let efforts = stage.equilibrium()?;
        let probs = stage.success_probabilities(&efforts);
        let count = optimal_whh_count(p, c, d.t)?;
        rows.push(SweepRow {
            value: *value,
            t: d.t,
            p_s: d.p_s,
            p_ns: d.p_ns,
            regime: format!("{:?}", efforts.regime).to_lowercase(),
            alpha_s: efforts.alpha_s,
            alpha_ns: efforts.alpha_ns,
            beta_ns: efforts.beta_ns,
            mu_s: efforts.mu_s,
            p_e_s: probs.p_e_s,
            p_e_ns: probs.p_e_ns,
            p_ne_ns: probs.p_ne_ns,
            p_b_s: probs.p_b_s,
            clipped: probs.clipped,
            condition1_feasible: condition1(p, c, d.t)?.feasible,
            profit_with_bbp: profit_with_bbp(p, &d, c).breakdown.total,
            profit_without_bbp: profit_without_bbp(p, d.t, c).total,
            n_eq26: count.n_eq26,
            n_quadratic: count.n_quadratic,
            n_bruteforce: count.n_bruteforce,
        });
    }
    let file = File::create(out).map_err(|e| io_failure(out, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    for r in &rows {
        w.serialize(r).map_err(|e| io_failure(out, e))?;
    }
    w.flush().map_err(|e| io_failure(out, e))?;
    print_json(&json!({ "parameter": spec.parameter, "points": rows.len(), "out": out }))
}

fn verify(
    seed: u64,
    draws: usize,
    out: Option<&Path>,
    overrides: &[(String, f64)],
) -> Result<(), Failure> {
    let mut config = SuiteConfig::new(seed, draws);
    for (name, value) in overrides {
        config.tolerances.set(name, *value)?;
    }
    let report = run_suite(&config)?;
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| io_failure(path, e))?,
        None => println!("{text}"),
    }
    if report.pass {
        return Ok(());
    }
    let mut err = io::stderr().lock();
    for r in report.reports.iter().filter(|r| !r.pass) {
        let _ = writeln!(
            err,
            "FAIL {}: {} of {} draws",
            r.id,
            r.failures.len(),
            r.draws_tested
        );
        if let Some(f) = r.failures.first() {
            let _ = writeln!(err, "  {}", f.detail);
            let _ = writeln!(
                err,
                "  {}",
                serde_json::to_string(&f.draw).expect("draws serialize")
            );
        }
    }
    Err(Failure::Verification)
}

fn simulate_cmd(
    path: &Path,
    trials: u64,
    seed: u64,
    mode: SimMode,
    trace: Option<&Path>,
) -> Result<(), Failure> {
    let (s, _) = load(path)?;
    let (d, note) = resolve_decision(&s)?;
    let outcome = match trace {
        Some(t) => {
            let file = File::create(t).map_err(|e| io_failure(t, e))?;
            simulate_with_trace(
                &s.market,
                &d,
                &s.curves,
                trials,
                seed,
                mode,
                BufWriter::new(file),
            )?
        }
        None => simulate(&s.market, &d, &s.curves, trials, seed, mode)?,
    };
    let expected = expected_outcome(&s.market, &d, &s.curves, mode)?;
    print_json(&json!({
        "decision": d,
        "note": note,
        "outcome": outcome,
        "expected": expected,
    }))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate { scenario } => evaluate(&scenario),
        Command::Optimize { scenario, mode } => optimize(&scenario, mode),
        Command::Sweep { scenario, out } => sweep(&scenario, &out),
        Command::Verify {
            seed,
            draws,
            out,
            tolerances,
        } => verify(seed, draws, out.as_deref(), &tolerances),
        Command::Simulate {
            scenario,
            trials,
            seed,
            mode,
            trace,
        } => simulate_cmd(&scenario, trials, seed, mode.into(), trace.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(v)) => {
            eprintln!("{v}");
            ExitCode::from(2)
        }
    }
}
