//! Monte Carlo lifetime of a data-gathering network.
//!
//! Every period each node receives a backlog uniform on `(0, λ]` packets, the
//! chosen strategy schedules it and each node pays its energy. The network
//! dies at the first period some node cannot pay for; that period is not
//! executed and the lifetime is the number of completed periods.

mod rng;

pub use rng::DrawKey;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scheduling::{build_schedule, energy_report, Backlog, EnergyReport, StrategyKind};
use crate::solver::SolverOptions;
use crate::types::NoiseModel;

pub const DEFAULT_PERIOD_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_nodes: usize,
    /// Joules per node.
    pub initial_energy: f64,
    /// Seconds.
    pub period: f64,
    pub packet_bits: u32,
    pub noise: NoiseModel,
    /// Upper end of the per-node backlog distribution, packets.
    pub lambda: f64,
    pub strategy: StrategyKind,
    pub runs: usize,
    pub seed: u64,
    pub period_cap: u64,
    pub solver: SolverOptions,
}

impl SimConfig {
    /// Network with four nodes, 2 J each, 30-bit packets, 30 s periods and
    /// noise power 1e-3 (−30 dB).
    pub fn reference() -> Self {
        Self {
            n_nodes: 4,
            initial_energy: 2.0,
            period: 30.0,
            packet_bits: 30,
            noise: NoiseModel::symmetric(1e-3, 4).expect("valid noise"),
            lambda: 1.0,
            strategy: StrategyKind::MinMax,
            runs: 1000,
            seed: 1,
            period_cap: DEFAULT_PERIOD_CAP,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::invalid("n_nodes", "must be at least 1"));
        }
        self.noise.check_len(self.n_nodes)?;
        // zero initial energy is allowed: every run then has lifetime 0
        if !(self.initial_energy.is_finite() && self.initial_energy >= 0.0) {
            return Err(Error::invalid("initial_energy", format!("{} is not a valid energy", self.initial_energy)));
        }
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid("period", format!("{} is not positive", self.period)));
        }
        if self.packet_bits == 0 {
            return Err(Error::invalid("packet_bits", "must be positive"));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::invalid("lambda", format!("{} is not positive", self.lambda)));
        }
        if self.runs == 0 {
            return Err(Error::invalid("runs", "must be at least 1"));
        }
        if self.period_cap == 0 {
            return Err(Error::invalid("period_cap", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub lifetime_periods: u64,
    /// True when the run reached the period cap alive.
    pub censored: bool,
    pub per_node_residual_energy: Vec<f64>,
    pub per_period_max_power: Vec<f64>,
    pub per_period_sum_energy: Vec<f64>,
}

/// Backlog of one period, `λ · u` with `u` uniform on (0, 1].
pub fn draw_backlogs(lambda: f64, key: &DrawKey, period: u64, n_nodes: usize, packet_bits: u32) -> Result<Backlog> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("{lambda} is not positive")));
    }
    Backlog::new(
        key.period_uniforms(period, n_nodes).into_iter().map(|u| lambda * u).collect(),
        packet_bits,
    )
}

/// Schedules one period and charges each node, unless some node cannot
/// afford its share, in which case the energies are returned untouched.
pub fn run_period(
    backlog: &Backlog,
    strategy: StrategyKind,
    config: &SimConfig,
    energies: &[f64],
) -> Result<(Vec<f64>, bool, EnergyReport)> {
    if energies.len() != backlog.len() {
        return Err(Error::LengthMismatch {
            expected: backlog.len(),
            got: energies.len(),
        });
    }
    let schedule = build_schedule(strategy, backlog, config.period, &config.noise, &config.solver)?;
    let report = energy_report(&schedule, &config.noise)?;
    let ok = report.per_node_energy.iter().zip(energies).all(|(need, have)| need <= have);
    if !ok {
        return Ok((energies.to_vec(), false, report));
    }
    let left = energies.iter().zip(&report.per_node_energy).map(|(e, s)| e - s).collect();
    Ok((left, true, report))
}

fn simulate_run(config: &SimConfig, strategy: StrategyKind, run: u64) -> Result<RunResult> {
    let key = DrawKey::new(config.seed, run);
    let mut energies = vec![config.initial_energy; config.n_nodes];
    let mut max_power = Vec::new();
    let mut sum_energy = Vec::new();
    let mut period = 0;
    while period < config.period_cap {
        let backlog = draw_backlogs(config.lambda, &key, period, config.n_nodes, config.packet_bits)?;
        let (left, ok, report) = run_period(&backlog, strategy, config, &energies)?;
        if !ok {
            break;
        }
        energies = left;
        max_power.push(report.max_power);
        sum_energy.push(report.sum_energy);
        period += 1;
    }
    Ok(RunResult {
        lifetime_periods: period,
        censored: period == config.period_cap,
        per_node_residual_energy: energies,
        per_period_max_power: max_power,
        per_period_sum_energy: sum_energy,
    })
}

fn simulate_strategy(config: &SimConfig, strategy: StrategyKind) -> Result<Vec<RunResult>> {
    config.validate()?;
    (0..config.runs as u64)
        .into_par_iter()
        .map(|run| simulate_run(config, strategy, run))
        .collect()
}

/// All runs of `config.strategy`, in run order.
pub fn simulate_lifetime(config: &SimConfig) -> Result<Vec<RunResult>> {
    simulate_strategy(config, config.strategy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for fewer than two samples.
    pub std_dev: f64,
}

impl Summary {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let count = xs.len();
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                std_dev: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / count as f64;
        let std_dev = if count > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { count, mean, std_dev }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.std_dev / (self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRow {
    pub strategy: StrategyKind,
    pub runs: usize,
    pub censored_runs: usize,
    /// Per-run lifetimes, periods.
    pub lifetime: Summary,
    /// Period-normalised peak power over the shared periods, watts.
    pub max_power: Summary,
    /// Sum energy per period over the shared periods, joules.
    pub sum_energy: Summary,
}

/// Results of the three strategies on identical backlog sequences.
///
/// Power and energy columns are averaged over the periods that every
/// strategy completed in a run (the first `min lifetime` periods), so each
/// strategy is measured on exactly the same backlogs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub lambda: f64,
    pub rows: Vec<StrategyRow>,
    /// `results[s][run]` for `s` in [`StrategyKind::ALL`] order.
    pub results: Vec<Vec<RunResult>>,
}

impl ComparisonTable {
    pub fn row(&self, kind: StrategyKind) -> &StrategyRow {
        self.rows.iter().find(|r| r.strategy == kind).expect("every strategy has a row")
    }

    pub fn runs_of(&self, kind: StrategyKind) -> &[RunResult] {
        let k = StrategyKind::ALL.iter().position(|&s| s == kind).expect("known strategy");
        &self.results[k]
    }
}

/// Runs every strategy under common random numbers; `config.strategy` is
/// ignored.
pub fn compare_strategies(config: &SimConfig) -> Result<ComparisonTable> {
    config.validate()?;
    let results: Vec<Vec<RunResult>> = StrategyKind::ALL
        .iter()
        .map(|&s| simulate_strategy(config, s))
        .collect::<Result<_>>()?;
    let shared: Vec<usize> = (0..config.runs)
        .map(|run| results.iter().map(|r| r[run].lifetime_periods as usize).min().unwrap_or(0))
        .collect();
    let rows = StrategyKind::ALL
        .iter()
        .zip(&results)
        .map(|(&strategy, runs)| {
            let prefix = |f: fn(&RunResult) -> &Vec<f64>| {
                runs.iter()
                    .zip(&shared)
                    .flat_map(move |(r, &m)| f(r)[..m].iter().copied())
                    .collect::<Vec<f64>>()
            };
            StrategyRow {
                strategy,
                runs: runs.len(),
                censored_runs: runs.iter().filter(|r| r.censored).count(),
                lifetime: Summary::of(runs.iter().map(|r| r.lifetime_periods as f64)),
                max_power: Summary::of(prefix(|r| &r.per_period_max_power)),
                sum_energy: Summary::of(prefix(|r| &r.per_period_sum_energy)),
            }
        })
        .collect();
    Ok(ComparisonTable {
        lambda: config.lambda,
        rows,
        results,
    })
}
