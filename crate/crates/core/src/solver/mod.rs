//! Min-max fair power allocation.
//!
//! The min-max optimal base of the power region is the base closest (in
//! squared Euclidean distance on received power) to the equal-allocation
//! point `G = (P_sum/N, …, P_sum/N)`. Every base is a time-sharing mixture of
//! successive-decoding vertices, so the solvers return both the base and the
//! mixture weights.
//!
//! Two backends compute the same point:
//!
//! * [`Backend::Enumeration`] materialises all N! vertices and solves the
//!   simplex-constrained QP over the mixture weights with an exact active-set
//!   method (N ≤ 7).
//! * [`Backend::FrankWolfe`] runs away-step conditional gradient, using the
//!   greedy vertex as linear oracle; it has no factorial cost.

mod frank_wolfe;
mod qp;

pub use qp::{min_norm_in_hull, HullQpResult};

use crate::error::{Error, Result};
use crate::polymatroid::{
    enumeration_limit, is_member, BasePolytope, CapacityRegion, PowerRegion,
    MEMBERSHIP_ENUM_LIMIT, PERMUTATION_ENUM_LIMIT,
};
use crate::types::{NoiseModel, Permutation, PowerVector, RateVector};

/// Largest N for the N!-vertex backend.
pub const ENUMERATION_LIMIT: usize = 7;
/// Largest N for which [`Backend::Auto`] picks enumeration.
pub const AUTO_ENUMERATION_LIMIT: usize = 6;
/// Mixture weights below this are dropped.
pub const WEIGHT_PRUNE: f64 = 1e-10;

pub const DEFAULT_ENUM_TOL: f64 = 1e-14;
pub const DEFAULT_FW_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Enumeration,
    FrankWolfe,
    /// Enumeration for N ≤ [`AUTO_ENUMERATION_LIMIT`], Frank-Wolfe above.
    Auto,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "enum" | "enumeration" => Ok(Backend::Enumeration),
            "fw" | "frank-wolfe" => Ok(Backend::FrankWolfe),
            "auto" => Ok(Backend::Auto),
            other => Err(Error::invalid("backend", format!("unknown backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub backend: Backend,
    /// Relative duality-gap tolerance; `None` picks the backend default.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            tol: None,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolverOptions {
    pub fn with_backend(backend: Backend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }
}

/// The point on the sum-power hyperplane with equal received power.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualAllocationPoint {
    pub received: Vec<f64>,
    pub transmit: PowerVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseLabel {
    /// The equal point is one of the vertices.
    VertexCoincident,
    /// The equal point is a base but not a vertex; time sharing is needed.
    InteriorFeasible,
    /// The equal point lies outside the dominant face.
    Infeasible,
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CaseLabel::VertexCoincident => "VertexCoincident",
            CaseLabel::InteriorFeasible => "InteriorFeasible",
            CaseLabel::Infeasible => "Infeasible",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxSolution {
    /// Transmit powers of the optimal base.
    pub base: PowerVector,
    /// Received powers `f_i P_i` of the optimal base.
    pub received: Vec<f64>,
    /// Time-sharing mixture: vertex permutation and weight, heaviest first.
    pub coefficients: Vec<(Permutation, f64)>,
    pub case: CaseLabel,
    /// Objective value at the optimum (squared, possibly weighted, distance).
    pub distance: f64,
    pub iterations: usize,
    pub gap: f64,
}

/// Max-min fair rate base of a capacity region.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSolution {
    pub rates: RateVector,
    pub coefficients: Vec<(Permutation, f64)>,
    pub distance: f64,
    pub iterations: usize,
    pub gap: f64,
}

pub fn equal_allocation(rates: &RateVector, noise: &NoiseModel) -> Result<EqualAllocationPoint> {
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    let n = rates.len();
    let level = region.sum_power() / n as f64;
    let received = vec![level; n];
    let transmit = PowerVector::new(region.to_transmit(&received))?;
    Ok(EqualAllocationPoint { received, transmit })
}

fn weighted_distance(x: &[f64], weights: &[f64], target: &[f64]) -> f64 {
    x.iter()
        .zip(weights)
        .zip(target)
        .map(|((xi, w), c)| w * (xi - c) * (xi - c))
        .sum()
}

fn classify_target<B: BasePolytope + ?Sized>(region: &B, target: &[f64]) -> Result<CaseLabel> {
    let n = region.dim();
    enumeration_limit("case classification", n, PERMUTATION_ENUM_LIMIT)?;
    if !is_member(region, target)? {
        return Ok(CaseLabel::Infeasible);
    }
    let coincident = Permutation::all(n).iter().any(|perm| {
        region
            .vertex_coords(perm.order())
            .iter()
            .zip(target)
            .all(|(v, g)| (v - g).abs() <= 1e-9 * (1.0 + g.abs()))
    });
    Ok(if coincident {
        CaseLabel::VertexCoincident
    } else {
        CaseLabel::InteriorFeasible
    })
}

/// Position of the equal-allocation point relative to the dominant face.
pub fn classify_case(rates: &RateVector, noise: &NoiseModel) -> Result<CaseLabel> {
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    let g = equal_allocation(rates, noise)?;
    classify_target(&region, &g.received)
}

/// Output of a generic min-distance solve, in polytope coordinates.
struct Projection {
    coords: Vec<f64>,
    coefficients: Vec<(Permutation, f64)>,
    distance: f64,
    iterations: usize,
    gap: f64,
}

fn prune_and_sort(mut mix: Vec<(Permutation, f64)>) -> Vec<(Permutation, f64)> {
    mix.retain(|(_, w)| *w >= WEIGHT_PRUNE);
    let total: f64 = mix.iter().map(|(_, w)| w).sum();
    for (_, w) in mix.iter_mut() {
        *w /= total;
    }
    mix.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    mix
}

fn mixture_point<B: BasePolytope + ?Sized>(region: &B, mix: &[(Permutation, f64)]) -> Vec<f64> {
    let mut x = vec![0.0; region.dim()];
    for (perm, w) in mix {
        for (xi, vi) in x.iter_mut().zip(region.vertex_coords(perm.order())) {
            *xi += w * vi;
        }
    }
    x
}

fn project_enumeration<B: BasePolytope + ?Sized>(
    region: &B,
    weights: &[f64],
    target: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Projection> {
    let n = region.dim();
    enumeration_limit("enumeration backend", n, ENUMERATION_LIMIT)?;
    let perms = Permutation::all(n);
    let scaled: Vec<Vec<f64>> = perms
        .iter()
        .map(|p| {
            region
                .vertex_coords(p.order())
                .iter()
                .zip(weights)
                .zip(target)
                .map(|((v, w), c)| w.sqrt() * (v - c))
                .collect()
        })
        .collect();
    let qp = min_norm_in_hull(&scaled, tol, max_iter).map_err(|e| match e {
        Error::SolverFailure { iterations, gap, best } => {
            let mix: Vec<_> = perms.iter().cloned().zip(best).collect();
            Error::SolverFailure {
                iterations,
                gap,
                best: mixture_point(region, &mix),
            }
        }
        other => other,
    })?;
    let mix = prune_and_sort(perms.into_iter().zip(qp.weights).collect());
    let coords = mixture_point(region, &mix);
    Ok(Projection {
        distance: weighted_distance(&coords, weights, target),
        coords,
        coefficients: mix,
        iterations: qp.iterations,
        gap: qp.gap,
    })
}

fn project_frank_wolfe<B: BasePolytope + ?Sized>(
    region: &B,
    weights: &[f64],
    target: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Projection> {
    let out = frank_wolfe::away_step_fw(region, weights, target, tol, max_iter)?;
    let mix = prune_and_sort(out.atoms.into_iter().map(|a| (a.perm, a.weight)).collect());
    let coords = mixture_point(region, &mix);
    Ok(Projection {
        distance: weighted_distance(&coords, weights, target),
        coords,
        coefficients: mix,
        iterations: out.iterations,
        gap: out.gap,
    })
}

fn project<B: BasePolytope + ?Sized>(
    region: &B,
    weights: &[f64],
    target: &[f64],
    opts: &SolverOptions,
) -> Result<Projection> {
    let n = region.dim();
    if n == 1 {
        let perm = Permutation::identity(1);
        let coords = region.vertex_coords(perm.order());
        return Ok(Projection {
            distance: weighted_distance(&coords, weights, target),
            coords,
            coefficients: vec![(perm, 1.0)],
            iterations: 0,
            gap: 0.0,
        });
    }
    let backend = match opts.backend {
        Backend::Auto if n <= AUTO_ENUMERATION_LIMIT => Backend::Enumeration,
        Backend::Auto => Backend::FrankWolfe,
        b => b,
    };
    match backend {
        Backend::Enumeration => project_enumeration(
            region,
            weights,
            target,
            opts.tol.unwrap_or(DEFAULT_ENUM_TOL),
            opts.max_iter,
        ),
        _ => project_frank_wolfe(
            region,
            weights,
            target,
            opts.tol.unwrap_or(DEFAULT_FW_TOL),
            opts.max_iter,
        ),
    }
}

fn case_of<B: BasePolytope + ?Sized>(region: &B, target: &[f64], p: &Projection) -> Result<CaseLabel> {
    if region.dim() <= PERMUTATION_ENUM_LIMIT {
        return classify_target(region, target);
    }
    let scale: f64 = target.iter().map(|c| c * c).sum();
    if region.dim() <= MEMBERSHIP_ENUM_LIMIT {
        return Ok(if is_member(region, target)? {
            CaseLabel::InteriorFeasible
        } else {
            CaseLabel::Infeasible
        });
    }
    Ok(if p.distance > 1e-12 * scale {
        CaseLabel::Infeasible
    } else {
        CaseLabel::InteriorFeasible
    })
}

fn solve_power(
    rates: &RateVector,
    noise: &NoiseModel,
    weights: Vec<f64>,
    target: Vec<f64>,
    opts: &SolverOptions,
) -> Result<MinMaxSolution> {
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    let proj = project(&region, &weights, &target, opts).map_err(|e| match e {
        Error::SolverFailure { iterations, gap, best } => Error::SolverFailure {
            iterations,
            gap,
            best: region.to_transmit(&best),
        },
        other => other,
    })?;
    let case = case_of(&region, &target, &proj)?;
    Ok(MinMaxSolution {
        base: PowerVector::new(region.to_transmit(&proj.coords))?,
        received: proj.coords,
        coefficients: proj.coefficients,
        case,
        distance: proj.distance,
        iterations: proj.iterations,
        gap: proj.gap,
    })
}

/// Min-max base closest to the equal received-power point, with the backend
/// chosen by `opts`.
pub fn solve(rates: &RateVector, noise: &NoiseModel, opts: &SolverOptions) -> Result<MinMaxSolution> {
    let n = rates.len();
    noise.check_len(n)?;
    let level = crate::polymatroid::sum_power(rates, noise) / n as f64;
    solve_power(rates, noise, vec![1.0; n], vec![level; n], opts)
}

/// N!-vertex backend; `tol` is relative to the squared scale of the vertices.
pub fn solve_enumeration(rates: &RateVector, noise: &NoiseModel, tol: f64) -> Result<MinMaxSolution> {
    let opts = SolverOptions {
        backend: Backend::Enumeration,
        tol: Some(tol),
        max_iter: DEFAULT_MAX_ITER,
    };
    solve(rates, noise, &opts)
}

/// Greedy-oracle Frank-Wolfe backend; `tol` is relative to `Σ G_i²`.
pub fn solve_frank_wolfe(
    rates: &RateVector,
    noise: &NoiseModel,
    tol: f64,
    max_iter: usize,
) -> Result<MinMaxSolution> {
    let opts = SolverOptions {
        backend: Backend::FrankWolfe,
        tol: Some(tol),
        max_iter,
    };
    solve(rates, noise, &opts)
}

/// Gain-weighted variant: minimises `Σ f_i (P_i − a)²` over transmit-power
/// bases, where `a = P_sum / Σ f_i` is the equal transmit power on the
/// sum-power hyperplane. This equalises transmit (not received) power where
/// feasible. With unit gains it is the unweighted problem, computed through
/// the same arithmetic.
pub fn solve_weighted(rates: &RateVector, noise: &NoiseModel, opts: &SolverOptions) -> Result<MinMaxSolution> {
    let n = rates.len();
    noise.check_len(n)?;
    let psum = crate::polymatroid::sum_power(rates, noise);
    let gains = noise.gains();
    let level = psum / gains.iter().sum::<f64>();
    // in received coordinates Q = f·P: Σ f (Q/f − a)² = Σ (1/f)(Q − a f)²
    let weights: Vec<f64> = gains.iter().map(|f| 1.0 / f).collect();
    let target: Vec<f64> = gains.iter().map(|f| level * f).collect();
    solve_power(rates, noise, weights, target, opts)
}

/// Max-min fair rates: the base of the capacity region of `powers` closest to
/// the equal split of the sum capacity.
pub fn max_min_rates(powers: &PowerVector, noise: &NoiseModel, opts: &SolverOptions) -> Result<RateSolution> {
    let region = CapacityRegion::new(powers, noise)?;
    let n = region.dim();
    let level = region.total_rank() / n as f64;
    let proj = project(&region, &vec![1.0; n], &vec![level; n], opts)?;
    Ok(RateSolution {
        rates: RateVector::new(proj.coords.iter().map(|r| r.max(0.0)).collect())?,
        coefficients: proj.coefficients,
        distance: proj.distance,
        iterations: proj.iterations,
        gap: proj.gap,
    })
}
