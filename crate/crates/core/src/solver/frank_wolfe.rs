//! Away-step conditional gradient for `min Σ w_i (x_i − c_i)²` over the base
//! polytope of a (contra-)polymatroid. The linear subproblem is the greedy
//! vertex of [`BasePolytope::greedy_min`], so no vertex list is ever built.
//!
//! Whenever a new vertex enters the active set, the weights of all active
//! vertices are re-optimised exactly (a fully corrective step). Without it the
//! method crawls on faces where several coordinates tie.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::polymatroid::BasePolytope;
use crate::solver::qp::min_norm_in_hull;
use crate::types::Permutation;

#[derive(Debug, Clone)]
pub(crate) struct Atom {
    pub perm: Permutation,
    pub coords: Vec<f64>,
    pub weight: f64,
}

/// Exact minimiser over the hull of the active atoms, in the coordinates
/// `√w (v − c)` where the objective is a squared norm. Keeps the current
/// weights if the subproblem does not improve them.
fn fully_correct(atoms: &mut Vec<Atom>, weights: &[f64], target: &[f64], tol: f64) {
    let objective = |atoms: &[Atom]| -> f64 {
        let mut x = vec![0.0; target.len()];
        for a in atoms {
            for (xi, vi) in x.iter_mut().zip(&a.coords) {
                *xi += a.weight * vi;
            }
        }
        x.iter().zip(target).zip(weights).map(|((x, c), w)| w * (x - c) * (x - c)).sum()
    };
    let points: Vec<Vec<f64>> = atoms
        .iter()
        .map(|a| {
            a.coords
                .iter()
                .zip(target)
                .zip(weights)
                .map(|((v, c), w)| w.sqrt() * (v - c))
                .collect()
        })
        .collect();
    let Ok(res) = min_norm_in_hull(&points, tol * 1e-2, 10 * points.len() + 100) else {
        return;
    };
    let before = objective(atoms);
    let old: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
    for (a, w) in atoms.iter_mut().zip(&res.weights) {
        a.weight = *w;
    }
    if objective(atoms) > before {
        for (a, w) in atoms.iter_mut().zip(old) {
            a.weight = w;
        }
        return;
    }
    atoms.retain(|a| a.weight > 0.0);
}

#[derive(Debug, Clone)]
pub(crate) struct FwOutcome {
    pub atoms: Vec<Atom>,
    pub iterations: usize,
    pub gap: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `tol` is relative to `Σ w_i c_i²`.
pub(crate) fn away_step_fw<B: BasePolytope + ?Sized>(
    region: &B,
    weights: &[f64],
    target: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<FwOutcome> {
    let n = region.dim();
    let scale: f64 = weights.iter().zip(target).map(|(w, c)| w * c * c).sum();
    let tol_abs = tol * scale;

    let (perm0, v0) = region.greedy_min(&vec![0.0; n]);
    let mut atoms = vec![Atom {
        perm: perm0.clone(),
        coords: v0.clone(),
        weight: 1.0,
    }];
    let mut index: HashMap<Permutation, usize> = HashMap::from([(perm0, 0)]);
    let mut x = v0;
    let mut gap = f64::INFINITY;

    for it in 0..max_iter {
        let grad: Vec<f64> = (0..n).map(|i| 2.0 * weights[i] * (x[i] - target[i])).collect();
        let (s_perm, s) = region.greedy_min(&grad);
        let gx = dot(&grad, &x);
        gap = gx - dot(&grad, &s);
        if gap <= tol_abs {
            return Ok(FwOutcome {
                atoms,
                iterations: it,
                gap: gap.max(0.0),
            });
        }

        let (away, away_val) = atoms
            .iter()
            .enumerate()
            .map(|(k, a)| (k, dot(&grad, &a.coords)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let away_gap = away_val - gx;

        let toward = gap >= away_gap;
        let (dir, gamma_max): (Vec<f64>, f64) = if toward {
            (s.iter().zip(&x).map(|(si, xi)| si - xi).collect(), 1.0)
        } else {
            let a = atoms[away].weight;
            (
                x.iter().zip(&atoms[away].coords).map(|(xi, vi)| xi - vi).collect(),
                if a < 1.0 { a / (1.0 - a) } else { f64::INFINITY },
            )
        };
        let curvature: f64 = 2.0 * dir.iter().zip(weights).map(|(d, w)| w * d * d).sum::<f64>();
        let slope = dot(&grad, &dir);
        if curvature <= 0.0 || slope >= 0.0 {
            return Ok(FwOutcome {
                atoms,
                iterations: it,
                gap: gap.max(0.0),
            });
        }
        let gamma = (-slope / curvature).min(gamma_max);

        if toward {
            for a in atoms.iter_mut() {
                a.weight *= 1.0 - gamma;
            }
            if gamma >= 1.0 {
                atoms.clear();
                index.clear();
            }
            match index.get(&s_perm) {
                Some(&k) => atoms[k].weight += gamma,
                None => {
                    index.insert(s_perm.clone(), atoms.len());
                    atoms.push(Atom {
                        perm: s_perm,
                        coords: s,
                        weight: gamma,
                    });
                    if atoms.len() > 1 {
                        fully_correct(&mut atoms, weights, target, tol);
                        index = atoms
                            .iter()
                            .enumerate()
                            .map(|(k, a)| (a.perm.clone(), k))
                            .collect();
                    }
                }
            }
        } else {
            for a in atoms.iter_mut() {
                a.weight *= 1.0 + gamma;
            }
            atoms[away].weight -= gamma;
            if gamma >= gamma_max {
                atoms.swap_remove(away);
                index = atoms
                    .iter()
                    .enumerate()
                    .map(|(k, a)| (a.perm.clone(), k))
                    .collect();
            }
        }

        // recombine to keep x consistent with the atom weights
        x = vec![0.0; n];
        for a in &atoms {
            for (xi, vi) in x.iter_mut().zip(&a.coords) {
                *xi += a.weight * vi;
            }
        }
    }
    let best = x;
    Err(Error::SolverFailure {
        iterations: max_iter,
        gap,
        best,
    })
}
