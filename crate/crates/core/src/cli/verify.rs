//! Randomised self-checks run by `macfair verify`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::polymatroid::{
    capacity_rank, check_rank_modularity, dep, greedy_linear_min, is_base, is_lex_optimal_base, is_minmax,
    power_rank, sat, sum_power, vertex, Modularity, PERMUTATION_ENUM_LIMIT,
};
use crate::solver::{solve, solve_enumeration, solve_frank_wolfe, SolverOptions, DEFAULT_ENUM_TOL, DEFAULT_FW_TOL};
use crate::types::{NoiseModel, Permutation, PowerVector, RateVector, Subset};

#[derive(Debug, Clone, PartialEq)]
pub enum SuiteStatus {
    Passed,
    Failed { counterexample: String },
    /// The ground set is too large for this suite's enumeration.
    Limited(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    /// Instances checked before stopping.
    pub checked: usize,
    pub status: SuiteStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub n: usize,
    pub instances: usize,
    pub seed: u64,
    /// Perturb the solver output before the fairness checks.
    pub inject_fault: bool,
}

struct Instance {
    rates: RateVector,
    noise: NoiseModel,
}

impl Instance {
    fn random(rng: &mut ChaCha8Rng, n: usize, random_gains: bool) -> Self {
        let rates = (0..n).map(|_| 2.0 - rng.gen_range(0.0..2.0)).collect();
        let sigma_sq = if rng.gen_bool(0.5) { 1.0 } else { 1e-3 };
        let gains = (0..n)
            .map(|_| if random_gains { rng.gen_range(0.5..2.0) } else { 1.0 })
            .collect();
        Self {
            rates: RateVector::new(rates).expect("rates in (0, 2]"),
            noise: NoiseModel::new(sigma_sq, gains).expect("valid noise"),
        }
    }

    fn describe(&self) -> String {
        format!(
            "rates={:?} sigma_sq={:?} gains={:?}",
            self.rates.as_slice(),
            self.noise.sigma_sq(),
            self.noise.gains()
        )
    }
}

/// `Ok(None)` passes, `Ok(Some(msg))` is a counterexample.
type Check<'a> = dyn FnMut(&mut ChaCha8Rng) -> Result<Option<String>> + 'a;

fn run_suite(name: &'static str, opts: &VerifyOptions, check: &mut Check<'_>) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ fxhash(name));
    for k in 0..opts.instances {
        match check(&mut rng) {
            Ok(None) => {}
            Ok(Some(counterexample)) => {
                return SuiteOutcome {
                    name,
                    checked: k + 1,
                    status: SuiteStatus::Failed { counterexample },
                }
            }
            Err(Error::EnumerationLimit { what, n, limit }) => {
                return SuiteOutcome {
                    name,
                    checked: k,
                    status: SuiteStatus::Limited(format!("{what}: n = {n} exceeds {limit}")),
                }
            }
            Err(e) => {
                return SuiteOutcome {
                    name,
                    checked: k + 1,
                    status: SuiteStatus::Failed {
                        counterexample: format!("error: {e}"),
                    },
                }
            }
        }
    }
    SuiteOutcome {
        name,
        checked: opts.instances,
        status: SuiteStatus::Passed,
    }
}

/// Stable per-suite stream separation.
fn fxhash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn run_verify(opts: &VerifyOptions) -> Vec<SuiteOutcome> {
    let n = opts.n;
    let mut out = Vec::new();

    out.push(run_suite("power-rank-supermodular", opts, &mut |rng| {
        let inst = Instance::random(rng, n, true);
        let ok = check_rank_modularity(
            n,
            |m| power_rank(&inst.rates, &inst.noise, &Subset::from_mask(m)).expect("mask in range"),
            Modularity::Supermodular,
        )?;
        Ok((!ok).then(|| inst.describe()))
    }));

    out.push(run_suite("capacity-rank-submodular", opts, &mut |rng| {
        let inst = Instance::random(rng, n, true);
        let powers = PowerVector::new((0..n).map(|_| 10.0 - rng.gen_range(0.0..10.0)).collect())?;
        let ok = check_rank_modularity(
            n,
            |m| capacity_rank(&powers, &inst.noise, &Subset::from_mask(m)).expect("mask in range"),
            Modularity::Submodular,
        )?;
        Ok((!ok).then(|| format!("powers={:?} {}", powers.as_slice(), inst.describe())))
    }));

    out.push(run_suite("vertex-validity", opts, &mut |rng| {
        let inst = Instance::random(rng, n, true);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let perm = Permutation::new(order)?;
        let v = vertex(&inst.rates, &inst.noise, &perm)?;
        let gains = inst.noise.gains();
        let mut prefix = Vec::new();
        let mut received = 0.0;
        for &i in perm.order() {
            prefix.push(i);
            received += gains[i] * v[i];
            let rank = power_rank(&inst.rates, &inst.noise, &Subset::new(prefix.clone()))?;
            if !close(received, rank, 1e-9) {
                return Ok(Some(format!("chain set not tight: perm={perm} vertex={:?} {}", v.as_slice(), inst.describe())));
            }
        }
        Ok((!is_base(&v, &inst.rates, &inst.noise)?)
            .then(|| format!("not a base: perm={perm} vertex={:?} {}", v.as_slice(), inst.describe())))
    }));

    out.push(run_suite("greedy-vs-brute-force", opts, &mut |rng| {
        if n > PERMUTATION_ENUM_LIMIT {
            return Err(Error::EnumerationLimit {
                what: "permutation brute force",
                n,
                limit: PERMUTATION_ENUM_LIMIT,
            });
        }
        let inst = Instance::random(rng, n, true);
        let theta: Vec<f64> = (0..n).map(|_| 1.0 - rng.gen_range(0.0..1.0)).collect();
        let (_, p) = greedy_linear_min(&theta, &inst.rates, &inst.noise)?;
        let value = |p: &PowerVector| theta.iter().zip(p.as_slice()).map(|(t, x)| t * x).sum::<f64>();
        let greedy = value(&p);
        let mut best = f64::INFINITY;
        for perm in Permutation::all(n) {
            best = best.min(value(&vertex(&inst.rates, &inst.noise, &perm)?));
        }
        Ok((!close(greedy, best, 1e-12) && greedy > best)
            .then(|| format!("greedy {greedy:?} > brute force {best:?}: theta={theta:?} {}", inst.describe())))
    }));

    out.push(run_suite("tight-set-lattice", opts, &mut |rng| {
        let inst = Instance::random(rng, n, true);
        // a random point of the dominant face
        let mut p = vec![0.0; n];
        let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = w.iter().sum();
        for wk in &w {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let v = vertex(&inst.rates, &inst.noise, &Permutation::new(order)?)?;
            for (pi, vi) in p.iter_mut().zip(v.as_slice()) {
                *pi += wk / total * vi;
            }
        }
        let p = PowerVector::new(p)?;
        let s = sat(&p, &inst.rates, &inst.noise)?;
        for i in s.members() {
            let d = dep(&p, *i, &inst.rates, &inst.noise)?;
            if !d.contains(*i) || !d.is_subset_of(&s) {
                return Ok(Some(format!(
                    "dep({}) = {d} not within sat = {s}: point={:?} {}",
                    i + 1,
                    p.as_slice(),
                    inst.describe()
                )));
            }
        }
        Ok(None)
    }));

    let inject = opts.inject_fault;
    out.push(run_suite("lex-optimal-vs-minmax", opts, &mut |rng| {
        let inst = Instance::random(rng, n, false);
        let sol = solve(&inst.rates, &inst.noise, &SolverOptions::default())?;
        let mut base = sol.base.into_inner();
        if inject && n > 1 {
            // move power between the two most extreme nodes, leaving the sum unchanged
            let psum = sum_power(&inst.rates, &inst.noise);
            let (lo, hi) = extreme_indices(&base);
            let shift = 0.05 * psum / n as f64;
            base[hi] += shift;
            base[lo] = (base[lo] - shift).max(0.0);
        }
        let base = PowerVector::new(base)?;
        let step = 1e-4 * sum_power(&inst.rates, &inst.noise);
        let lex = match is_lex_optimal_base(&base, &inst.rates, &inst.noise) {
            Ok(v) => v,
            Err(Error::NotAMember | Error::NotABase) => false,
            Err(e) => return Err(e),
        };
        let minmax = match is_minmax(&base, &inst.rates, &inst.noise, step) {
            Ok(v) => v,
            Err(Error::NotAMember | Error::NotABase) => false,
            Err(e) => return Err(e),
        };
        Ok((!(lex && minmax)).then(|| {
            format!(
                "base={:?} lex_optimal={lex} minmax={minmax} {}",
                base.as_slice(),
                inst.describe()
            )
        }))
    }));

    out.push(run_suite("backend-agreement", opts, &mut |rng| {
        let inst = Instance::random(rng, n, false);
        let e = solve_enumeration(&inst.rates, &inst.noise, DEFAULT_ENUM_TOL)?;
        let f = solve_frank_wolfe(&inst.rates, &inst.noise, DEFAULT_FW_TOL, crate::solver::DEFAULT_MAX_ITER)?;
        let psum = sum_power(&inst.rates, &inst.noise);
        let diff = e
            .base
            .as_slice()
            .iter()
            .zip(f.base.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((diff > 1e-8 * psum).then(|| {
            format!(
                "enumeration={:?} frank_wolfe={:?} {}",
                e.base.as_slice(),
                f.base.as_slice(),
                inst.describe()
            )
        }))
    }));

    out
}

fn extreme_indices(x: &[f64]) -> (usize, usize) {
    let lo = (0..x.len()).min_by(|&a, &b| x[a].total_cmp(&x[b])).expect("nonempty");
    let hi = (0..x.len()).max_by(|&a, &b| x[a].total_cmp(&x[b])).expect("nonempty");
    (lo, hi)
}
