//! Rank functions and base polytopes of the Gaussian multi-access channel.
//!
//! Two polyhedra are modelled:
//!
//! * the power contra-polymatroid of a rate vector `R`, whose points are
//!   received-power vectors `Q` with `Q(A) >= σ²(2^{2R(A)} - 1)` for every
//!   subset `A`, and
//! * the capacity polymatroid of a power vector `P`, whose points are rate
//!   vectors with `R(A) <= ½·log₂(1 + Σ_{i∈A} f_i P_i / σ²)`.
//!
//! Both are handled through [`BasePolytope`], which exposes the rank function
//! and the chain (vertex) construction. Everything that only depends on the
//! rank function (membership, tight sets, greedy optimisation, the min-norm
//! solvers) is written once against that trait.
//!
//! Received power is the working coordinate for the power region; transmit
//! power is recovered by dividing by the channel gains at the boundary.

mod lattice;

pub use lattice::{
    dep, dep_in, is_lex_optimal_base, is_lex_optimal_in, is_minmax, is_minmax_in, lex_leq,
    minmax_default_step, sat, sat_in, sort_desc, tight_table, DistinctLevels,
};

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::types::{NoiseModel, Permutation, PowerVector, RateVector, Subset};

/// Largest ground set for which 2^N subset enumeration is attempted.
pub const SUBSET_ENUM_LIMIT: usize = 16;
/// Membership tests alone may go a little further.
pub const MEMBERSHIP_ENUM_LIMIT: usize = 20;
/// Subset-pair enumeration in the modularity check.
pub const MODULARITY_ENUM_LIMIT: usize = 12;
/// Lexicographic-optimality test.
pub const LEX_ENUM_LIMIT: usize = 12;
/// Permutation brute force (N!).
pub const PERMUTATION_ENUM_LIMIT: usize = 8;

/// Relative feasibility / tightness tolerance, scaled by `1 + |rank|`.
pub const RANK_TOL: f64 = 1e-9;

#[inline]
pub fn rank_tolerance(rank: f64) -> f64 {
    RANK_TOL * (1.0 + rank.abs())
}

/// Direction of the rank constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// `x(A) >= ρ(A)` with ρ supermodular.
    Contra,
    /// `x(A) <= ρ(A)` with ρ submodular.
    Poly,
}

/// A (contra-)polymatroid given by its rank function.
pub trait BasePolytope: Sync {
    fn dim(&self) -> usize;

    fn polarity(&self) -> Polarity;

    fn rank(&self, set: &Subset) -> f64;

    /// Rank of every subset, indexed by bitmask. Only valid for small `dim`.
    fn rank_table(&self) -> Vec<f64>;

    /// Coordinates of the vertex generated by the chain
    /// `{order[0]}, {order[0], order[1]}, …`, indexed by node.
    fn vertex_coords(&self, order: &[usize]) -> Vec<f64>;

    fn total_rank(&self) -> f64 {
        self.rank(&Subset::full(self.dim()))
    }

    /// Edmonds greedy: the vertex minimising `cost · x` over the base polytope.
    /// Ties keep ascending node order.
    fn greedy_min(&self, cost: &[f64]) -> (Permutation, Vec<f64>) {
        let mut order: Vec<usize> = (0..self.dim()).collect();
        match self.polarity() {
            // the cheapest coordinates get the smallest increments, which come
            // first along the chain of a supermodular rank
            Polarity::Contra => order.sort_by(|&a, &b| cost[b].total_cmp(&cost[a])),
            Polarity::Poly => order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b])),
        }
        let coords = self.vertex_coords(&order);
        (Permutation::new(order).expect("sorted indices form a permutation"), coords)
    }
}

/// Subset sums of `values` indexed by bitmask.
pub(crate) fn subset_sum_table(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut table = vec![0.0; 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        table[mask] = table[mask & (mask - 1)] + values[low];
    }
    table
}

pub(crate) fn enumeration_limit(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::EnumerationLimit { what, n, limit });
    }
    Ok(())
}

/// `σ²(2^{2r} − 1)` evaluated without cancellation for small `r`.
#[inline]
fn power_for_rate(sigma_sq: f64, rate: f64) -> f64 {
    sigma_sq * (2.0 * LN_2 * rate).exp_m1()
}

/// The feasible received-power region of a rate vector.
#[derive(Debug, Clone)]
pub struct PowerRegion {
    rates: RateVector,
    noise: NoiseModel,
}

impl PowerRegion {
    pub fn new(rates: RateVector, noise: NoiseModel) -> Result<Self> {
        noise.check_len(rates.len())?;
        Ok(Self { rates, noise })
    }

    pub fn rates(&self) -> &RateVector {
        &self.rates
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Received power `f_i P_i`.
    pub fn to_received(&self, transmit: &[f64]) -> Vec<f64> {
        transmit
            .iter()
            .zip(self.noise.gains())
            .map(|(p, f)| p * f)
            .collect()
    }

    pub fn to_transmit(&self, received: &[f64]) -> Vec<f64> {
        received
            .iter()
            .zip(self.noise.gains())
            .map(|(q, f)| q / f)
            .collect()
    }

    pub fn sum_power(&self) -> f64 {
        power_for_rate(self.noise.sigma_sq(), self.rates.total())
    }
}

impl BasePolytope for PowerRegion {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn polarity(&self) -> Polarity {
        Polarity::Contra
    }

    fn rank(&self, set: &Subset) -> f64 {
        let r: f64 = set.members().iter().map(|&i| self.rates[i]).sum();
        power_for_rate(self.noise.sigma_sq(), r)
    }

    fn rank_table(&self) -> Vec<f64> {
        let sigma_sq = self.noise.sigma_sq();
        subset_sum_table(self.rates.as_slice())
            .into_iter()
            .map(|r| power_for_rate(sigma_sq, r))
            .collect()
    }

    fn vertex_coords(&self, order: &[usize]) -> Vec<f64> {
        let sigma_sq = self.noise.sigma_sq();
        let mut q = vec![0.0; self.dim()];
        let mut prefix = 0.0;
        for &i in order {
            let r = self.rates[i];
            // σ²·2^{2·prefix}·(2^{2r} − 1)
            q[i] = sigma_sq * (2.0 * LN_2 * prefix).exp() * (2.0 * LN_2 * r).exp_m1();
            prefix += r;
        }
        q
    }

    fn total_rank(&self) -> f64 {
        self.sum_power()
    }
}

/// The capacity region (rates) of a power vector.
#[derive(Debug, Clone)]
pub struct CapacityRegion {
    received: Vec<f64>,
    sigma_sq: f64,
}

impl CapacityRegion {
    pub fn new(powers: &PowerVector, noise: &NoiseModel) -> Result<Self> {
        noise.check_len(powers.len())?;
        let received = powers
            .as_slice()
            .iter()
            .zip(noise.gains())
            .map(|(p, f)| p * f)
            .collect();
        Ok(Self {
            received,
            sigma_sq: noise.sigma_sq(),
        })
    }

    fn rate_for_power(&self, q: f64) -> f64 {
        (q / self.sigma_sq).ln_1p() / (2.0 * LN_2)
    }
}

impl BasePolytope for CapacityRegion {
    fn dim(&self) -> usize {
        self.received.len()
    }

    fn polarity(&self) -> Polarity {
        Polarity::Poly
    }

    fn rank(&self, set: &Subset) -> f64 {
        let q: f64 = set.members().iter().map(|&i| self.received[i]).sum();
        self.rate_for_power(q)
    }

    fn rank_table(&self) -> Vec<f64> {
        subset_sum_table(&self.received)
            .into_iter()
            .map(|q| self.rate_for_power(q))
            .collect()
    }

    fn vertex_coords(&self, order: &[usize]) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        let mut interference = self.sigma_sq;
        for &i in order {
            // ½·log₂(1 + q_i / (σ² + already-present power))
            r[i] = (self.received[i] / interference).ln_1p() / (2.0 * LN_2);
            interference += self.received[i];
        }
        r
    }
}

/// `X(A) = Σ_{i∈A} X_i`.
pub fn subset_sum(x: &[f64], set: &Subset) -> Result<f64> {
    set.check(x.len())?;
    Ok(set.members().iter().map(|&i| x[i]).sum())
}

/// Supermodular rank of the power region: `σ²(2^{2R(A)} − 1)`.
pub fn power_rank(rates: &RateVector, noise: &NoiseModel, set: &Subset) -> Result<f64> {
    set.check(rates.len())?;
    let r = subset_sum(rates.as_slice(), set)?;
    Ok(power_for_rate(noise.sigma_sq(), r))
}

/// Submodular rank of the capacity region: `½·log₂(1 + Σ_{i∈A} f_i P_i / σ²)`.
pub fn capacity_rank(powers: &PowerVector, noise: &NoiseModel, set: &Subset) -> Result<f64> {
    set.check(powers.len())?;
    Ok(CapacityRegion::new(powers, noise)?.rank(set))
}

/// `σ²(2^{2ΣR} − 1)`, the received-power sum shared by every base.
pub fn sum_power(rates: &RateVector, noise: &NoiseModel) -> f64 {
    power_for_rate(noise.sigma_sq(), rates.total())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modularity {
    Submodular,
    Supermodular,
}

/// Exhaustively checks normalisation, monotonicity and sub/supermodularity of
/// a set function given on bitmasks over `n` elements.
pub fn check_rank_modularity<F>(n: usize, rank: F, mode: Modularity) -> Result<bool>
where
    F: Fn(u64) -> f64,
{
    enumeration_limit("modularity check", n, MODULARITY_ENUM_LIMIT)?;
    let table: Vec<f64> = (0..1u64 << n).map(&rank).collect();
    let close = |a: f64, b: f64| (a - b).abs() <= RANK_TOL * (1.0 + a.abs().max(b.abs()));

    if !close(table[0], 0.0) {
        return Ok(false);
    }
    for mask in 0..table.len() {
        for i in 0..n {
            let bigger = mask | 1 << i;
            if table[mask] > table[bigger] && !close(table[mask], table[bigger]) {
                return Ok(false);
            }
        }
    }
    for a in 0..table.len() {
        for b in a..table.len() {
            let lhs = table[a] + table[b];
            let rhs = table[a | b] + table[a & b];
            let ok = match mode {
                Modularity::Submodular => lhs >= rhs || close(lhs, rhs),
                Modularity::Supermodular => lhs <= rhs || close(lhs, rhs),
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Membership of `x` (in polytope coordinates) in the polyhedron.
pub fn is_member<B: BasePolytope + ?Sized>(region: &B, x: &[f64]) -> Result<bool> {
    let n = region.dim();
    if x.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: x.len(),
        });
    }
    enumeration_limit("membership test", n, MEMBERSHIP_ENUM_LIMIT)?;
    if x.iter().any(|&v| v < -rank_tolerance(0.0)) {
        return Ok(false);
    }
    let sums = subset_sum_table(x);
    let ranks = region.rank_table();
    let ok = sums.iter().zip(&ranks).all(|(&s, &r)| match region.polarity() {
        Polarity::Contra => s >= r - rank_tolerance(r),
        Polarity::Poly => s <= r + rank_tolerance(r),
    });
    Ok(ok)
}

/// Membership plus `x(I) = ρ(I)`.
pub fn is_base_of<B: BasePolytope + ?Sized>(region: &B, x: &[f64]) -> Result<bool> {
    if !is_member(region, x)? {
        return Ok(false);
    }
    let total: f64 = x.iter().sum();
    let r = region.total_rank();
    Ok((total - r).abs() <= rank_tolerance(r))
}

/// Whether the transmit power vector `p` supports the rates `rates`.
pub fn contains(p: &PowerVector, rates: &RateVector, noise: &NoiseModel) -> Result<bool> {
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    check_len(p.len(), rates.len())?;
    is_member(&region, &region.to_received(p.as_slice()))
}

/// Whether `p` is a base (minimal feasible point) of the power region.
pub fn is_base(p: &PowerVector, rates: &RateVector, noise: &NoiseModel) -> Result<bool> {
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    check_len(p.len(), rates.len())?;
    is_base_of(&region, &region.to_received(p.as_slice()))
}

/// The successive-decoding vertex of `perm`: node `perm[0]` is decoded last
/// and gets the smallest received power.
pub fn vertex(rates: &RateVector, noise: &NoiseModel, perm: &Permutation) -> Result<PowerVector> {
    check_len(perm.len(), rates.len())?;
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    let q = region.vertex_coords(perm.order());
    PowerVector::new(region.to_transmit(&q))
}

/// Minimises `θ · P` over the power region.
pub fn greedy_linear_min(
    theta: &[f64],
    rates: &RateVector,
    noise: &NoiseModel,
) -> Result<(Permutation, PowerVector)> {
    check_len(theta.len(), rates.len())?;
    if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
        return Err(Error::invalid("theta", format!("{t} is not finite")));
    }
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    // θ·P = Σ (θ_i / f_i) Q_i
    let cost: Vec<f64> = theta
        .iter()
        .zip(noise.gains())
        .map(|(t, f)| t / f)
        .collect();
    let (perm, q) = region.greedy_min(&cost);
    Ok((perm, PowerVector::new(region.to_transmit(&q))?))
}

/// Maximises `λ · R` over the capacity region of `powers`.
pub fn greedy_linear_max_rates(
    lambda: &[f64],
    powers: &PowerVector,
    noise: &NoiseModel,
) -> Result<(Permutation, RateVector)> {
    check_len(lambda.len(), powers.len())?;
    if let Some(l) = lambda.iter().find(|l| !l.is_finite()) {
        return Err(Error::invalid("lambda", format!("{l} is not finite")));
    }
    let region = CapacityRegion::new(powers, noise)?;
    let cost: Vec<f64> = lambda.iter().map(|l| -l).collect();
    let (perm, r) = region.greedy_min(&cost);
    Ok((perm, RateVector::new(r)?))
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}
