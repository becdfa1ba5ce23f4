//! Collecting-period schedules built from per-node backlogs.
//!
//! One channel use takes one second, so a period of `T` seconds offers `T`
//! channel uses and power times time is energy in joules.
//!
//! Nodes with an empty queue are dropped before scheduling and come back with
//! zero rate and power in every epoch.

use crate::error::{Error, Result};
use crate::polymatroid::{sum_power, vertex};
use crate::solver::{solve, SolverOptions};
use crate::types::{NoiseModel, Permutation, PowerVector, RateVector};

/// Fractions must sum to one within this.
pub const FRACTION_TOL: f64 = 1e-10;
/// Relative tolerance on delivered bits.
pub const DELIVERY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Backlog {
    packets: Vec<f64>,
    packet_bits: u32,
}

impl Backlog {
    /// Packet counts may be fractional; zero entries mark idle nodes.
    pub fn new(packets: Vec<f64>, packet_bits: u32) -> Result<Self> {
        if packets.is_empty() {
            return Err(Error::invalid("packets", "empty backlog"));
        }
        if let Some(b) = packets.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::invalid("packets", format!("{b} is not a non-negative finite count")));
        }
        if packet_bits == 0 {
            return Err(Error::invalid("packet_bits", "must be positive"));
        }
        Ok(Self { packets, packet_bits })
    }

    pub fn packets(&self) -> &[f64] {
        &self.packets
    }

    pub fn packet_bits(&self) -> u32 {
        self.packet_bits
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn bits(&self) -> Vec<f64> {
        self.packets.iter().map(|b| b * self.packet_bits as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyKind {
    MinMax,
    Minicost,
    Tdma,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [StrategyKind::MinMax, StrategyKind::Minicost, StrategyKind::Tdma];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::MinMax => "minmax",
            StrategyKind::Minicost => "minicost",
            StrategyKind::Tdma => "tdma",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minmax" | "min-max" => Ok(StrategyKind::MinMax),
            "minicost" => Ok(StrategyKind::Minicost),
            "tdma" => Ok(StrategyKind::Tdma),
            other => Err(Error::invalid("strategy", format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub duration_fraction: f64,
    pub powers: PowerVector,
    pub rates: RateVector,
    /// Wire order π; the receiver decodes π(N) first.
    pub decode_order: Permutation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub kind: StrategyKind,
    pub epochs: Vec<Epoch>,
    /// Seconds.
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub per_node_energy: Vec<f64>,
    /// Largest per-node energy divided by the period.
    pub max_power: f64,
    pub sum_energy: f64,
}

impl Schedule {
    pub fn n_nodes(&self) -> usize {
        self.epochs.first().map_or(0, |e| e.powers.len())
    }

    /// Bits each node sends over the period.
    pub fn delivered_bits(&self) -> Vec<f64> {
        let mut bits = vec![0.0; self.n_nodes()];
        for e in &self.epochs {
            for (b, r) in bits.iter_mut().zip(e.rates.as_slice()) {
                *b += e.duration_fraction * self.period * r;
            }
        }
        bits
    }

    /// Structural checks: a positive period, consistent epoch widths and
    /// fractions forming a probability vector.
    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::invalid("period", format!("{} is not positive", self.period)));
        }
        let n = self.n_nodes();
        if n == 0 {
            return Err(Error::invalid("epochs", "schedule has no epochs"));
        }
        for e in &self.epochs {
            for len in [e.powers.len(), e.rates.len(), e.decode_order.len()] {
                if len != n {
                    return Err(Error::LengthMismatch { expected: n, got: len });
                }
            }
            if !(0.0..=1.0).contains(&e.duration_fraction) {
                return Err(Error::invalid(
                    "duration_fraction",
                    format!("{} outside [0, 1]", e.duration_fraction),
                ));
            }
        }
        let total: f64 = self.epochs.iter().map(|e| e.duration_fraction).sum();
        if (total - 1.0).abs() > FRACTION_TOL {
            return Err(Error::invalid("duration_fraction", format!("fractions sum to {total}")));
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus exact delivery of `backlog`.
    pub fn validate_against(&self, backlog: &Backlog) -> Result<()> {
        self.validate()?;
        if backlog.len() != self.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes(),
                got: backlog.len(),
            });
        }
        for (i, (sent, want)) in self.delivered_bits().iter().zip(backlog.bits()).enumerate() {
            if (sent - want).abs() > DELIVERY_TOL * want.max(1.0) {
                return Err(Error::invalid(
                    "rates",
                    format!("node {} delivers {sent} bits, backlog is {want}", i + 1),
                ));
            }
        }
        Ok(())
    }
}

fn check_period(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("period", format!("{t} is not positive")))
    }
}

/// Constant rates that clear the backlog in `t` channel uses.
pub fn average_rates(backlog: &Backlog, t: f64) -> Result<RateVector> {
    check_period(t)?;
    RateVector::new(backlog.bits().into_iter().map(|b| b / t).collect())
}

/// Indices of nodes with a nonempty queue.
fn active_nodes(backlog: &Backlog) -> Vec<usize> {
    (0..backlog.len()).filter(|&i| backlog.packets[i] > 0.0).collect()
}

/// Lifts an epoch of the active sub-network back to all `n` nodes. Idle nodes
/// go to the front of the order, where they would get the lowest power anyway.
fn lift(active: &[usize], n: usize, fraction: f64, powers: &[f64], rates: &[f64], order: &Permutation) -> Epoch {
    let mut p = vec![0.0; n];
    let mut r = vec![0.0; n];
    for (k, &i) in active.iter().enumerate() {
        p[i] = powers[k];
        r[i] = rates[k];
    }
    let mut wire: Vec<usize> = (0..n).filter(|i| !active.contains(i)).collect();
    wire.extend(order.order().iter().map(|&k| active[k]));
    Epoch {
        duration_fraction: fraction,
        powers: PowerVector::new(p).expect("non-negative powers"),
        rates: RateVector::new(r).expect("non-negative rates"),
        decode_order: Permutation::new(wire).expect("lifted order is a bijection"),
    }
}

fn silent(kind: StrategyKind, n: usize, t: f64) -> Schedule {
    Schedule {
        kind,
        epochs: vec![Epoch {
            duration_fraction: 1.0,
            powers: PowerVector::zeros(n),
            rates: RateVector::new(vec![0.0; n]).expect("zero rates"),
            decode_order: Permutation::identity(n),
        }],
        period: t,
    }
}

struct Reduced {
    active: Vec<usize>,
    rates: RateVector,
    noise: NoiseModel,
}

fn reduce(backlog: &Backlog, t: f64, noise: &NoiseModel) -> Result<Option<Reduced>> {
    noise.check_len(backlog.len())?;
    let all = average_rates(backlog, t)?;
    let active = active_nodes(backlog);
    if active.is_empty() {
        return Ok(None);
    }
    let rates = RateVector::new(active.iter().map(|&i| all[i]).collect())?;
    Ok(Some(Reduced {
        noise: noise.restrict(&active),
        active,
        rates,
    }))
}

/// Single epoch at the average rates with one fixed decoding order. The order
/// decodes stronger channels first (identity in a symmetric channel).
pub fn minicost_schedule(backlog: &Backlog, t: f64, noise: &NoiseModel) -> Result<Schedule> {
    let Some(red) = reduce(backlog, t, noise)? else {
        return Ok(silent(StrategyKind::Minicost, backlog.len(), t));
    };
    let gains = red.noise.gains();
    let mut order: Vec<usize> = (0..red.active.len()).collect();
    order.sort_by(|&a, &b| gains[a].total_cmp(&gains[b]));
    let order = Permutation::new(order)?;
    let p = vertex(&red.rates, &red.noise, &order)?;
    Ok(Schedule {
        kind: StrategyKind::Minicost,
        epochs: vec![lift(&red.active, backlog.len(), 1.0, p.as_slice(), red.rates.as_slice(), &order)],
        period: t,
    })
}

/// Each node transmits alone for a share of the period proportional to its
/// backlog, which minimises TDMA sum energy.
pub fn tdma_schedule(backlog: &Backlog, t: f64, noise: &NoiseModel) -> Result<Schedule> {
    tdma_schedule_with(backlog, t, noise, None)
}

/// TDMA with explicit slot shares (one per active node, summing to one);
/// `None` uses shares proportional to backlog.
pub fn tdma_schedule_with(
    backlog: &Backlog,
    t: f64,
    noise: &NoiseModel,
    shares: Option<&[f64]>,
) -> Result<Schedule> {
    let Some(red) = reduce(backlog, t, noise)? else {
        return Ok(silent(StrategyKind::Tdma, backlog.len(), t));
    };
    let m = red.active.len();
    let total: f64 = red.rates.total();
    let alpha: Vec<f64> = match shares {
        Some(a) if a.len() != m => return Err(Error::LengthMismatch { expected: m, got: a.len() }),
        Some(a) => {
            if a.iter().any(|x| x.is_nan() || *x <= 0.0) || (a.iter().sum::<f64>() - 1.0).abs() > FRACTION_TOL {
                return Err(Error::invalid("shares", "slot shares must be positive and sum to 1"));
            }
            a.to_vec()
        }
        None => red.rates.as_slice().iter().map(|r| r / total).collect(),
    };
    let sigma_sq = red.noise.sigma_sq();
    let mut epochs = Vec::with_capacity(m);
    for k in 0..m {
        let rate = red.rates[k] / alpha[k];
        let power = sigma_sq * (2.0 * std::f64::consts::LN_2 * rate).exp_m1() / red.noise.gains()[k];
        if !power.is_finite() {
            return Err(Error::invalid("shares", format!("slot {} needs unbounded power", k + 1)));
        }
        let mut p = vec![0.0; m];
        let mut r = vec![0.0; m];
        p[k] = power;
        r[k] = rate;
        let mut order: Vec<usize> = (0..m).filter(|&j| j != k).collect();
        order.push(k);
        let order = Permutation::new(order)?;
        epochs.push(lift(&red.active, backlog.len(), alpha[k], &p, &r, &order));
    }
    Ok(Schedule {
        kind: StrategyKind::Tdma,
        epochs,
        period: t,
    })
}

/// Time sharing among successive-decoding vertices at constant average rates,
/// one epoch per mixture weight of the min-max solution.
pub fn minmax_schedule(backlog: &Backlog, t: f64, noise: &NoiseModel) -> Result<Schedule> {
    minmax_schedule_with(backlog, t, noise, &SolverOptions::default())
}

pub fn minmax_schedule_with(
    backlog: &Backlog,
    t: f64,
    noise: &NoiseModel,
    opts: &SolverOptions,
) -> Result<Schedule> {
    let Some(red) = reduce(backlog, t, noise)? else {
        return Ok(silent(StrategyKind::MinMax, backlog.len(), t));
    };
    let sol = solve(&red.rates, &red.noise, opts)?;
    let mut epochs = Vec::with_capacity(sol.coefficients.len());
    for (perm, beta) in &sol.coefficients {
        let p = vertex(&red.rates, &red.noise, perm)?;
        epochs.push(lift(&red.active, backlog.len(), *beta, p.as_slice(), red.rates.as_slice(), perm));
    }
    Ok(Schedule {
        kind: StrategyKind::MinMax,
        epochs,
        period: t,
    })
}

pub fn build_schedule(
    kind: StrategyKind,
    backlog: &Backlog,
    t: f64,
    noise: &NoiseModel,
    opts: &SolverOptions,
) -> Result<Schedule> {
    match kind {
        StrategyKind::MinMax => minmax_schedule_with(backlog, t, noise, opts),
        StrategyKind::Minicost => minicost_schedule(backlog, t, noise),
        StrategyKind::Tdma => tdma_schedule(backlog, t, noise),
    }
}

/// Energy per node over the period and the period-normalised peak power.
/// The noise model is unused by the accounting itself but must match the
/// schedule's width.
pub fn energy_report(s: &Schedule, noise: &NoiseModel) -> Result<EnergyReport> {
    s.validate()?;
    noise.check_len(s.n_nodes())?;
    let mut per_node_energy = vec![0.0; s.n_nodes()];
    for e in &s.epochs {
        for (acc, p) in per_node_energy.iter_mut().zip(e.powers.as_slice()) {
            *acc += e.duration_fraction * s.period * p;
        }
    }
    let max_energy = per_node_energy.iter().copied().fold(0.0, f64::max);
    Ok(EnergyReport {
        max_power: max_energy / s.period,
        sum_energy: per_node_energy.iter().sum(),
        per_node_energy,
    })
}

/// `T · P_sum(average rates)`: the energy every strategy spends in total in
/// a symmetric channel.
pub fn minimum_sum_energy(backlog: &Backlog, t: f64, noise: &NoiseModel) -> Result<f64> {
    Ok(match reduce(backlog, t, noise)? {
        Some(red) => t * sum_power(&red.rates, &red.noise),
        None => 0.0,
    })
}
