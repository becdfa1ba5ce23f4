//! Minimum-norm point of the convex hull of a finite point set,
//! `min ‖Σ_k β_k y_k‖²` over the probability simplex, by Wolfe's active-set
//! method. Each major cycle adds the point minimising `⟨x, y⟩`; minor cycles
//! move to the affine minimiser of the current corral and drop points whose
//! weight would turn negative. Terminates finitely in exact arithmetic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Weights below this are treated as zero inside the corral.
const CORRAL_EPS: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct HullQpResult {
    /// Simplex weight of every input point.
    pub weights: Vec<f64>,
    pub iterations: usize,
    /// Frank-Wolfe duality gap `2(‖x‖² − min_k ⟨x, y_k⟩)` in input units.
    pub gap: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimiser of `‖Σ α_i p_i‖` subject to `Σ α_i = 1` for the corral points.
fn affine_minimizer(points: &[&[f64]]) -> Option<Vec<f64>> {
    let k = points.len();
    // (YᵀY + 11ᵀ) v = 1, α = v / Σv; the bordered Gram matrix is positive
    // definite whenever the corral is affinely independent
    let m = DMatrix::from_fn(k, k, |i, j| dot(points[i], points[j]) + 1.0);
    let rhs = DVector::from_element(k, 1.0);
    let v = match m.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => m.lu().solve(&rhs)?,
    };
    let s: f64 = v.iter().sum();
    if !(s.is_finite() && s.abs() > 0.0) {
        return None;
    }
    Some(v.iter().map(|vi| vi / s).collect())
}

/// Solves the hull QP to a relative gap `tol` (gap ≤ tol · max_k ‖y_k‖²).
pub fn min_norm_in_hull(points: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<HullQpResult> {
    assert!(!points.is_empty(), "hull of an empty point set");
    let scale = points
        .iter()
        .map(|p| dot(p, p).sqrt())
        .fold(0.0, f64::max);
    let mut weights = vec![0.0; points.len()];
    if scale == 0.0 {
        weights[0] = 1.0;
        return Ok(HullQpResult {
            weights,
            iterations: 0,
            gap: 0.0,
        });
    }
    let ys: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().map(|v| v / scale).collect())
        .collect();
    let dim = ys[0].len();

    let first = (0..ys.len())
        .min_by(|&a, &b| dot(&ys[a], &ys[a]).total_cmp(&dot(&ys[b], &ys[b])))
        .unwrap();
    let mut corral = vec![first];
    let mut lam = vec![1.0];
    let mut x = ys[first].clone();
    let mut gap = f64::INFINITY;

    let combine = |corral: &[usize], lam: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; dim];
        for (&c, &l) in corral.iter().zip(lam) {
            for (xi, yi) in x.iter_mut().zip(&ys[c]) {
                *xi += l * yi;
            }
        }
        x
    };

    for it in 0..max_iter {
        let xx = dot(&x, &x);
        let (j, best) = ys
            .iter()
            .enumerate()
            .map(|(k, y)| (k, dot(&x, y)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        gap = 2.0 * (xx - best);
        if gap <= tol || corral.contains(&j) {
            return Ok(finish(points.len(), &corral, &lam, it, gap.max(0.0) * scale * scale));
        }
        corral.push(j);
        lam.push(0.0);

        loop {
            let pts: Vec<&[f64]> = corral.iter().map(|&c| ys[c].as_slice()).collect();
            let Some(alpha) = affine_minimizer(&pts) else {
                // degenerate corral: drop the newest point and stop improving
                corral.pop();
                lam.pop();
                return Ok(finish(points.len(), &corral, &lam, it, gap.max(0.0) * scale * scale));
            };
            if alpha.iter().all(|&a| a > CORRAL_EPS) {
                lam = alpha;
                break;
            }
            // step from lam towards alpha until the first weight hits zero
            let theta = lam
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a <= CORRAL_EPS)
                .map(|(&l, &a)| if l - a > 0.0 { l / (l - a) } else { 0.0 })
                .fold(1.0, f64::min);
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut keep = lam.iter().map(|&l| l > CORRAL_EPS).collect::<Vec<_>>();
            if keep.iter().all(|&k| k) {
                // numerical stall: remove the smallest weight explicitly
                let worst = (0..lam.len())
                    .min_by(|&a, &b| lam[a].total_cmp(&lam[b]))
                    .unwrap();
                keep[worst] = false;
            }
            let mut k = 0;
            corral.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let mut k = 0;
            lam.retain(|_| {
                k += 1;
                keep[k - 1]
            });
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
            if corral.len() == 1 {
                lam = vec![1.0];
                break;
            }
        }
        x = combine(&corral, &lam);
    }
    let mut best = vec![0.0; points.len()];
    for (&c, &l) in corral.iter().zip(&lam) {
        best[c] = l;
    }
    Err(Error::SolverFailure {
        iterations: max_iter,
        gap: gap * scale * scale,
        best,
    })
}

fn finish(n: usize, corral: &[usize], lam: &[f64], iterations: usize, gap: f64) -> HullQpResult {
    let mut weights = vec![0.0; n];
    let s: f64 = lam.iter().sum();
    for (&c, &l) in corral.iter().zip(lam) {
        weights[c] += l / s;
    }
    HullQpResult {
        weights,
        iterations,
        gap,
    }
}
