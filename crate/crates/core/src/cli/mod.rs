//! The `macfair` command line.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 solver failure,
//! 3 verification failure.

pub mod config;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::Error;
use crate::scheduling::{build_schedule, energy_report, Backlog, StrategyKind};
use crate::sim::{compare_strategies, ComparisonTable, SimConfig};
use crate::solver::{max_min_rates, solve, solve_weighted, Backend, SolverOptions, DEFAULT_MAX_ITER};
use crate::types::{db_to_linear, NoiseModel, PowerVector, RateVector};

use config::{parse_config, ExperimentConfig, SEED_ENV};
use output::{schedule_csv_string, shortest, sig12, sig12_vec, tuple};
use verify::{run_verify, SuiteStatus, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "macfair", version, about = "Min-max fair power scheduling for Gaussian multi-access channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Min-max fair powers for a rate vector, or max-min fair rates for a power vector.
    Solve(SolveArgs),
    /// Build one collecting-period schedule and report its energy.
    Schedule(ScheduleArgs),
    /// Monte Carlo lifetime comparison of the three strategies.
    Simulate(SimulateArgs),
    /// Randomised self-checks of the polyhedral machinery and solvers.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct NoiseArgs {
    /// Noise power σ², linear (watts).
    #[arg(long, allow_negative_numbers = true, conflicts_with = "noise_db")]
    noise: Option<f64>,
    /// Noise power σ² in dB.
    #[arg(long, allow_negative_numbers = true)]
    noise_db: Option<f64>,
    /// Channel gains, comma separated (default: all ones).
    #[arg(long, value_delimiter = ',')]
    gains: Option<Vec<f64>>,
}

impl NoiseArgs {
    fn model(&self, n: usize) -> Result<NoiseModel, CliError> {
        let sigma_sq = match (self.noise, self.noise_db) {
            (Some(s), _) => s,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => 1.0,
        };
        let gains = self.gains.clone().unwrap_or_else(|| vec![1.0; n]);
        if gains.len() != n {
            return Err(CliError::usage(format!("--gains: {} values for {n} nodes", gains.len())));
        }
        NoiseModel::new(sigma_sq, gains).map_err(|e| CliError::usage(format!("--noise: {e}")))
    }
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// auto, enum or fw.
    #[arg(long, default_value = "auto")]
    backend: String,
    /// Relative duality-gap tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, CliError> {
        let backend: Backend = self
            .backend
            .parse()
            .map_err(|e: Error| CliError::usage(format!("--backend: {e}")))?;
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::usage(format!("--tol: {t} must be positive")));
            }
        }
        Ok(SolverOptions {
            backend,
            tol: self.tol,
            max_iter: self.max_iter,
        })
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Target rates in bits per channel use, comma separated.
    #[arg(long, value_delimiter = ',', required_unless_present = "powers", conflicts_with = "powers")]
    rates: Option<Vec<f64>>,
    /// Transmit powers; switches to the max-min fair rate problem.
    #[arg(long, value_delimiter = ',')]
    powers: Option<Vec<f64>>,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Minimise the gain-weighted distance to equal transmit power.
    #[arg(long)]
    weighted: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    /// Packets queued at each node, comma separated.
    #[arg(long, value_delimiter = ',')]
    backlogs: Vec<f64>,
    /// Bits per packet.
    #[arg(long, default_value_t = 30)]
    packet_bits: u32,
    /// Collecting period in seconds.
    #[arg(long, default_value_t = 30.0)]
    period: f64,
    #[command(flatten)]
    noise: NoiseArgs,
    /// minmax, minicost or tdma.
    #[arg(long, default_value = "minmax")]
    strategy: String,
    #[command(flatten)]
    solver: SolverArgs,
    /// Schedule CSV path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir` in the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Perturb solver outputs to exercise the failure path.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::usage(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::SolverFailure { .. } => EXIT_SOLVER,
            _ => EXIT_USAGE,
        };
        let message = match &e {
            Error::SolverFailure { best, .. } => format!("{e}; best iterate {best:?}"),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Schedule(a) => cmd_schedule(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, env_seed.as_deref(), out),
        Command::Verify(a) => cmd_verify(&a, env_seed.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::usage(format!("output: {e}"))
}

fn support_json(coefficients: &[(crate::types::Permutation, f64)]) -> Vec<serde_json::Value> {
    coefficients
        .iter()
        .map(|(p, w)| json!({ "order": p.to_string(), "weight": sig12(*w) }))
        .collect()
}

fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let opts = a.solver.options()?;
    if let Some(powers) = &a.powers {
        let powers = PowerVector::new(powers.clone()).map_err(|e| CliError::usage(format!("--powers: {e}")))?;
        let noise = a.noise.model(powers.len())?;
        let sol = max_min_rates(&powers, &noise, &opts)?;
        if a.json {
            let doc = json!({
                "rates": sig12_vec(sol.rates.as_slice()),
                "distance": sig12(sol.distance),
                "support": support_json(&sol.coefficients),
                "gap": sig12(sol.gap),
                "iterations": sol.iterations,
            });
            writeln!(out, "{doc}").map_err(io_err)?;
        } else {
            writeln!(out, "R* = {}", tuple(sol.rates.as_slice())).map_err(io_err)?;
            writeln!(out, "distance = {}", sig12(sol.distance)).map_err(io_err)?;
            write_support(out, &sol.coefficients)?;
            writeln!(out, "gap = {}", sig12(sol.gap)).map_err(io_err)?;
            writeln!(out, "iterations = {}", sol.iterations).map_err(io_err)?;
        }
        return Ok(EXIT_OK);
    }

    let rates = a.rates.clone().unwrap_or_default();
    let rates = RateVector::new(rates).map_err(|e| CliError::usage(format!("--rates: {e}")))?;
    let noise = a.noise.model(rates.len())?;
    let sol = if a.weighted {
        solve_weighted(&rates, &noise, &opts)?
    } else {
        solve(&rates, &noise, &opts)?
    };
    if a.json {
        let doc = json!({
            "powers": sig12_vec(sol.base.as_slice()),
            "received": sig12_vec(&sol.received),
            "case": sol.case.to_string(),
            "distance": sig12(sol.distance),
            "support": support_json(&sol.coefficients),
            "gap": sig12(sol.gap),
            "iterations": sol.iterations,
        });
        writeln!(out, "{doc}").map_err(io_err)?;
    } else {
        writeln!(out, "P* = {}", tuple(sol.base.as_slice())).map_err(io_err)?;
        writeln!(out, "received = {}", tuple(&sol.received)).map_err(io_err)?;
        writeln!(out, "case = {}", sol.case).map_err(io_err)?;
        writeln!(out, "distance = {}", sig12(sol.distance)).map_err(io_err)?;
        write_support(out, &sol.coefficients)?;
        writeln!(out, "gap = {}", sig12(sol.gap)).map_err(io_err)?;
        writeln!(out, "iterations = {}", sol.iterations).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

fn write_support(out: &mut dyn Write, coefficients: &[(crate::types::Permutation, f64)]) -> Result<(), CliError> {
    writeln!(out, "support:").map_err(io_err)?;
    for (p, w) in coefficients {
        writeln!(out, "  {p} {}", sig12(*w)).map_err(io_err)?;
    }
    Ok(())
}

fn cmd_schedule(a: &ScheduleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let backlog = Backlog::new(a.backlogs.clone(), a.packet_bits).map_err(|e| CliError::usage(format!("--backlogs: {e}")))?;
    if !(a.period.is_finite() && a.period > 0.0) {
        return Err(CliError::usage(format!("--period: {} must be positive", a.period)));
    }
    let kind: StrategyKind = a
        .strategy
        .parse()
        .map_err(|e: Error| CliError::usage(format!("--strategy: {e}")))?;
    let noise = a.noise.model(backlog.len())?;
    let schedule = build_schedule(kind, &backlog, a.period, &noise, &a.solver.options()?)?;
    schedule.validate_against(&backlog)?;
    let report = energy_report(&schedule, &noise)?;
    let csv = schedule_csv_string(&schedule)?;
    match &a.out {
        Some(path) => fs::write(path, &csv).map_err(|e| CliError::io(path, e))?,
        None => out.write_all(csv.as_bytes()).map_err(io_err)?,
    }
    if a.json {
        let doc = json!({
            "strategy": kind.name(),
            "epochs": schedule.epochs.len(),
            "per_node_energy": sig12_vec(&report.per_node_energy),
            "max_power": sig12(report.max_power),
            "sum_energy": sig12(report.sum_energy),
        });
        writeln!(out, "{doc}").map_err(io_err)?;
    } else {
        writeln!(out, "strategy = {kind}").map_err(io_err)?;
        writeln!(out, "epochs = {}", schedule.epochs.len()).map_err(io_err)?;
        writeln!(out, "per_node_energy = {}", tuple(&report.per_node_energy)).map_err(io_err)?;
        writeln!(out, "max_power = {}", sig12(report.max_power)).map_err(io_err)?;
        writeln!(out, "sum_energy = {}", sig12(report.sum_energy)).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

/// CSV bodies of the simulation outputs, keyed by file name.
pub fn simulation_files(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>, CliError> {
    let header = format!("# seed={} ({})\n", cfg.sim.seed, cfg.seed_source);
    let tables: Vec<ComparisonTable> = cfg
        .lambdas
        .iter()
        .map(|&lambda| compare_strategies(&SimConfig { lambda, ..cfg.sim.clone() }))
        .collect::<Result<_, _>>()?;
    let base = tables
        .iter()
        .find(|t| t.lambda == cfg.sim.lambda)
        .expect("the configured lambda is swept");

    let mut fig4 = header.clone() + "strategy,lambda,mean_max_power,std_max_power,periods\n";
    let mut fig5 = header.clone() + "strategy,lambda,mean_sum_energy,std_sum_energy,periods\n";
    for row in &base.rows {
        fig4 += &format!(
            "{},{},{},{},{}\n",
            row.strategy,
            shortest(base.lambda),
            shortest(row.max_power.mean),
            shortest(row.max_power.std_dev),
            row.max_power.count
        );
        fig5 += &format!(
            "{},{},{},{},{}\n",
            row.strategy,
            shortest(base.lambda),
            shortest(row.sum_energy.mean),
            shortest(row.sum_energy.std_dev),
            row.sum_energy.count
        );
    }
    let mut fig6 = header.clone() + "lambda,strategy,mean_lifetime,std_lifetime,runs,censored\n";
    let mut runs = header + "lambda,strategy,run,lifetime,censored\n";
    for t in &tables {
        for row in &t.rows {
            fig6 += &format!(
                "{},{},{},{},{},{}\n",
                shortest(t.lambda),
                row.strategy,
                shortest(row.lifetime.mean),
                shortest(row.lifetime.std_dev),
                row.runs,
                row.censored_runs
            );
        }
        for kind in StrategyKind::ALL {
            for (k, r) in t.runs_of(kind).iter().enumerate() {
                runs += &format!("{},{},{},{},{}\n", shortest(t.lambda), kind, k, r.lifetime_periods, r.censored);
            }
        }
    }
    Ok(vec![
        ("fig4.csv".into(), fig4),
        ("fig5.csv".into(), fig5),
        ("fig6.csv".into(), fig6),
        ("runs.csv".into(), runs),
    ])
}

fn cmd_simulate(a: &SimulateArgs, env_seed: Option<&str>, out: &mut dyn Write) -> Result<i32, CliError> {
    let text = fs::read_to_string(&a.config).map_err(|e| CliError::io(&a.config, e))?;
    let cfg = parse_config(&text, env_seed).map_err(|e| CliError::usage(format!("{}: {e}", a.config.display())))?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    writeln!(out, "# seed={} ({})", cfg.sim.seed, cfg.seed_source).map_err(io_err)?;
    let files = simulation_files(&cfg)?;
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    for (name, body) in &files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        writeln!(out, "wrote {}", path.display()).map_err(io_err)?;
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs, env_seed: Option<&str>, out: &mut dyn Write) -> Result<i32, CliError> {
    let (seed, source) = match (a.seed, env_seed) {
        (Some(s), _) => (s, "flag".to_string()),
        (None, Some(e)) => (
            e.trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{SEED_ENV}: `{e}` is not a valid seed")))?,
            format!("env {SEED_ENV}"),
        ),
        (None, None) => (config::DEFAULT_SEED, "default".to_string()),
    };
    if a.n == 0 {
        return Err(CliError::usage("--n: must be at least 1"));
    }
    writeln!(out, "# seed={seed} ({source}) n={} instances={}", a.n, a.instances).map_err(io_err)?;
    let outcomes = run_verify(&VerifyOptions {
        n: a.n,
        instances: a.instances,
        seed,
        inject_fault: a.inject_fault,
    });
    let mut failed = false;
    let mut limited = false;
    for o in &outcomes {
        match &o.status {
            SuiteStatus::Passed => writeln!(out, "PASS  {:<26} {} instances", o.name, o.checked),
            SuiteStatus::Failed { counterexample } => {
                failed = true;
                writeln!(out, "FAIL  {:<26} instance {}: {counterexample}", o.name, o.checked)
            }
            SuiteStatus::Limited(msg) => {
                limited = true;
                writeln!(out, "LIMIT {:<26} {msg}", o.name)
            }
        }
        .map_err(io_err)?;
    }
    Ok(if failed {
        EXIT_VERIFY
    } else if limited {
        EXIT_USAGE
    } else {
        EXIT_OK
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("macfair").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn solve_examples() {
        let (code, out, _) = call(&["solve", "--rates", "0.5,1.5", "--noise", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("P* = (7.5, 7.5)"), "{out}");
        assert!(out.contains("case = InteriorFeasible"));

        let (code, out, _) = call(&["solve", "--rates", "1,1", "--noise-db", "-30"]);
        assert_eq!(code, 0);
        assert!(out.contains("P* = (0.0075, 0.0075)"), "{out}");

        let (code, out, _) = call(&["solve", "--rates", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("P* = (3)") && out.contains("VertexCoincident"), "{out}");
    }

    #[test]
    fn json_matches_human_output() {
        let (_, human, _) = call(&["solve", "--rates", "0.1,1.9"]);
        let (_, js, _) = call(&["solve", "--rates", "0.1,1.9", "--json"]);
        let doc: serde_json::Value = serde_json::from_str(js.trim()).unwrap();
        let p: Vec<f64> = serde_json::from_value(doc["powers"].clone()).unwrap();
        assert!(human.contains(&format!("P* = ({}, {})", p[0], p[1])), "{human} vs {p:?}");
        assert!(human.contains(&format!("distance = {}", doc["distance"].as_f64().unwrap())));
    }

    #[test]
    fn parse_errors_name_the_field() {
        let (code, _, err) = call(&["solve", "--rates", "1,abc"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--rates"), "{err}");
        let (code, _, err) = call(&["solve", "--rates", "1,-1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--rates"), "{err}");
        let (code, _, err) = call(&["solve", "--rates", "1,1", "--backend", "simplex"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--backend"), "{err}");
        let (code, _, _) = call(&["frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn solver_failure_exit_code() {
        let (code, _, err) = call(&["solve", "--rates", "0.3,0.9,0.5,0.7", "--backend", "fw", "--max-iter", "1"]);
        assert_eq!(code, EXIT_SOLVER, "{err}");
    }

    #[test]
    fn schedule_rows() {
        let (code, out, _) = call(&["schedule", "--backlogs", "1,2", "--noise", "1", "--strategy", "minmax"]);
        assert_eq!(code, 0);
        let rows: Vec<&str> = out.lines().filter(|l| l.contains('>')).collect();
        assert_eq!(rows.len(), 2);
        assert!(out.contains("max_power = 31.5"), "{out}");
        let (_, out, _) = call(&["schedule", "--backlogs", "1,2", "--strategy", "minicost"]);
        assert_eq!(out.lines().filter(|l| l.contains('>')).count(), 1);
        let (_, out, _) = call(&["schedule", "--backlogs", "1,2", "--strategy", "tdma"]);
        assert_eq!(out.lines().filter(|l| l.contains('>')).count(), 2);
        assert!(out.contains("max_power = 42"));
    }

    #[test]
    fn verify_exit_codes() {
        let (code, out, _) = call(&["verify", "--n", "3", "--instances", "10", "--seed", "7"]);
        assert_eq!(code, EXIT_OK, "{out}");
        let (code, out, _) = call(&["verify", "--n", "3", "--instances", "10", "--seed", "7", "--inject-fault"]);
        assert_eq!(code, EXIT_VERIFY, "{out}");
        assert!(out.contains("FAIL  lex-optimal-vs-minmax"));
    }
}
