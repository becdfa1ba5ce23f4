//! Tight-set lattice (saturation and dependence sets) and the two optimality
//! certificates built on it: the level-set test for the lexicographically
//! optimal base and the pairwise-transfer min-max oracle.

use super::{
    enumeration_limit, is_base_of, is_member, rank_tolerance, subset_sum_table, BasePolytope,
    Polarity, PowerRegion, LEX_ENUM_LIMIT, PERMUTATION_ENUM_LIMIT, SUBSET_ENUM_LIMIT,
};
use crate::error::{Error, Result};
use crate::types::{NoiseModel, PowerVector, RateVector, Subset};

/// `tight[mask]` is true iff `x(A) = ρ(A)` within [`rank_tolerance`].
/// Fails with [`Error::NotAMember`] when `x` is infeasible.
pub fn tight_table<B: BasePolytope + ?Sized>(region: &B, x: &[f64]) -> Result<Vec<bool>> {
    enumeration_limit("tight-set enumeration", region.dim(), SUBSET_ENUM_LIMIT)?;
    if !is_member(region, x)? {
        return Err(Error::NotAMember);
    }
    let sums = subset_sum_table(x);
    let ranks = region.rank_table();
    Ok(sums
        .iter()
        .zip(&ranks)
        .map(|(&s, &r)| (s - r).abs() <= rank_tolerance(r))
        .collect())
}

fn sat_mask(tight: &[bool]) -> Result<usize> {
    let union = tight
        .iter()
        .enumerate()
        .filter(|(_, &t)| t)
        .fold(0usize, |acc, (m, _)| acc | m);
    if !tight[union] {
        return Err(Error::LatticeViolation(format!(
            "union of tight sets {} is not tight",
            Subset::from_mask(union as u64)
        )));
    }
    Ok(union)
}

fn dep_mask(tight: &[bool], sat: usize, i: usize) -> Result<usize> {
    if sat >> i & 1 == 0 {
        return Ok(0);
    }
    let inter = tight
        .iter()
        .enumerate()
        .filter(|(m, &t)| t && m >> i & 1 == 1)
        .fold(usize::MAX, |acc, (m, _)| acc & m);
    if inter >> i & 1 == 0 || !tight[inter] {
        return Err(Error::LatticeViolation(format!(
            "intersection of tight sets containing {} is {} and not a tight set containing it",
            i + 1,
            Subset::from_mask(inter as u64)
        )));
    }
    Ok(inter)
}

/// The saturated set: the union (and maximum) of all tight sets.
pub fn sat_in<B: BasePolytope + ?Sized>(region: &B, x: &[f64]) -> Result<Subset> {
    let tight = tight_table(region, x)?;
    Ok(Subset::from_mask(sat_mask(&tight)? as u64))
}

/// The dependent set of `i`: the minimum tight set containing `i`, or the
/// empty set when `i` is not saturated.
pub fn dep_in<B: BasePolytope + ?Sized>(region: &B, x: &[f64], i: usize) -> Result<Subset> {
    let n = region.dim();
    if i >= n {
        return Err(Error::InvalidSubset { index: i, n });
    }
    let tight = tight_table(region, x)?;
    let sat = sat_mask(&tight)?;
    Ok(Subset::from_mask(dep_mask(&tight, sat, i)? as u64))
}

fn power_region(x: &PowerVector, rates: &RateVector, noise: &NoiseModel) -> Result<(PowerRegion, Vec<f64>)> {
    let region = PowerRegion::new(rates.clone(), noise.clone())?;
    if x.len() != rates.len() {
        return Err(Error::LengthMismatch {
            expected: rates.len(),
            got: x.len(),
        });
    }
    let q = region.to_received(x.as_slice());
    Ok((region, q))
}

/// [`sat_in`] for a transmit power vector in the power region of `rates`.
pub fn sat(x: &PowerVector, rates: &RateVector, noise: &NoiseModel) -> Result<Subset> {
    let (region, q) = power_region(x, rates, noise)?;
    sat_in(&region, &q)
}

/// [`dep_in`] for a transmit power vector; `i` is 0-based.
pub fn dep(x: &PowerVector, i: usize, rates: &RateVector, noise: &NoiseModel) -> Result<Subset> {
    let (region, q) = power_region(x, rates, noise)?;
    dep_in(&region, &q, i)
}

/// Non-increasing rearrangement.
pub fn sort_desc(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Lexicographic `x ≤ y` on raw (unsorted) vectors.
pub fn lex_leq(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(match x.iter().zip(y).find(|(a, b)| a != b) {
        None => true,
        Some((a, b)) => a < b,
    })
}

/// Tolerance-clustered distinct values of a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctLevels {
    /// Representative value of each level, ordered from the level that must
    /// be kept smallest first (descending for min-max, ascending for max-min).
    pub values: Vec<f64>,
    /// Level index of each coordinate.
    pub level_of: Vec<usize>,
}

impl DistinctLevels {
    pub const ABS_TOL: f64 = 1e-6;
    pub const REL_TOL: f64 = 1e-6;

    pub fn distinct(a: f64, b: f64) -> bool {
        (a - b).abs() > Self::ABS_TOL + Self::REL_TOL * a.abs().max(b.abs())
    }

    /// Levels in descending order (`descending = true`) or ascending order.
    pub fn new(x: &[f64], descending: bool) -> Self {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        if descending {
            idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
        } else {
            idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        }
        let mut values: Vec<f64> = Vec::new();
        let mut level_of = vec![0; x.len()];
        let mut prev: Option<f64> = None;
        for &i in &idx {
            match prev {
                Some(p) if !Self::distinct(p, x[i]) => {
                    // keep the member closest to the next level as representative
                    *values.last_mut().unwrap() = x[i];
                }
                _ => values.push(x[i]),
            }
            level_of[i] = values.len() - 1;
            prev = Some(x[i]);
        }
        Self { values, level_of }
    }
}

/// Level-set certificate of lexicographic optimality for a base `x`.
///
/// For a contra-polymatroid the levels are the distinct values in descending
/// order and `S_j = {l : x_l ≥ C_j}`; for a polymatroid they are ascending and
/// `S_j = {l : x_l ≤ C_j}`. `x` is optimal iff every `i ∈ S_j` has a
/// non-empty dependent set contained in `S_j`.
pub fn is_lex_optimal_in<B: BasePolytope + ?Sized>(region: &B, x: &[f64]) -> Result<bool> {
    enumeration_limit("lexicographic optimality test", region.dim(), LEX_ENUM_LIMIT)?;
    if !is_base_of(region, x)? {
        return Err(Error::NotABase);
    }
    let tight = tight_table(region, x)?;
    let sat = sat_mask(&tight)?;
    let levels = DistinctLevels::new(x, region.polarity() == Polarity::Contra);
    for i in 0..region.dim() {
        let dep = dep_mask(&tight, sat, i)?;
        if dep == 0 {
            return Ok(false);
        }
        // the smallest S_j holding i is {l : level(l) <= level(i)}
        let outside = (0..region.dim())
            .filter(|&l| dep >> l & 1 == 1)
            .any(|l| levels.level_of[l] > levels.level_of[i]);
        if outside {
            return Ok(false);
        }
    }
    Ok(true)
}

/// [`is_lex_optimal_in`] for a transmit power vector, on received-power levels.
pub fn is_lex_optimal_base(x: &PowerVector, rates: &RateVector, noise: &NoiseModel) -> Result<bool> {
    let (region, q) = power_region(x, rates, noise)?;
    is_lex_optimal_in(&region, &q)
}

/// Default probe step: `1e-4` of the total rank.
pub fn minmax_default_step<B: BasePolytope + ?Sized>(region: &B) -> f64 {
    1e-4 * region.total_rank()
}

/// Pairwise-transfer fairness oracle for a base `x`.
///
/// For every ordered pair of coordinates at strictly different levels (for a
/// contra-polymatroid the larger one is worse off, for a polymatroid the
/// smaller one), and for `e ∈ {step, step/10}`, checks whether moving `e`
/// of mass from the better-off coordinate to the worse-off one keeps the
/// point feasible. Any such feasible move improves fairness, so the answer
/// is `false`.
///
/// Feasibility of the moved point is decided from the slacks of `x`: the move
/// is blocked iff some constraint it tightens has slack below `e`.
pub fn is_minmax_in<B: BasePolytope + ?Sized>(region: &B, x: &[f64], step: f64) -> Result<bool> {
    let n = region.dim();
    enumeration_limit("min-max perturbation oracle", n, PERMUTATION_ENUM_LIMIT)?;
    if !is_base_of(region, x)? {
        return Err(Error::NotABase);
    }
    if !(step.is_finite() && step > 0.0) {
        // a zero total rank admits only the zero base
        return Ok(true);
    }
    let sums = subset_sum_table(x);
    let ranks = region.rank_table();
    let slack: Vec<f64> = match region.polarity() {
        Polarity::Contra => sums.iter().zip(&ranks).map(|(s, r)| s - r).collect(),
        Polarity::Poly => sums.iter().zip(&ranks).map(|(s, r)| r - s).collect(),
    };
    let contra = region.polarity() == Polarity::Contra;
    for from in 0..n {
        for to in 0..n {
            // contra: relieve a larger coordinate; poly: raise a smaller one
            let (worse, better) = if contra { (from, to) } else { (to, from) };
            let strictly_worse = if contra {
                x[worse] > x[better] && DistinctLevels::distinct(x[worse], x[better])
            } else {
                x[worse] < x[better] && DistinctLevels::distinct(x[worse], x[better])
            };
            if from == to || !strictly_worse {
                continue;
            }
            // moving e from `from` to `to`
            for e in [step, step / 10.0] {
                if !contra && x[from] < e {
                    continue;
                }
                let blocked = (0..slack.len()).any(|m| {
                    let tightened = if contra {
                        m >> from & 1 == 1 && m >> to & 1 == 0
                    } else {
                        m >> to & 1 == 1 && m >> from & 1 == 0
                    };
                    tightened && slack[m] < e * (1.0 - 1e-6)
                });
                if !blocked {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// [`is_minmax_in`] for a transmit power vector, transfers in received power.
pub fn is_minmax(x: &PowerVector, rates: &RateVector, noise: &NoiseModel, step: f64) -> Result<bool> {
    let (region, q) = power_region(x, rates, noise)?;
    is_minmax_in(&region, &q, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymatroid::{sum_power, CapacityRegion};
    use crate::types::Permutation;

    fn rv(v: &[f64]) -> RateVector {
        RateVector::new(v.to_vec()).unwrap()
    }

    fn pv(v: &[f64]) -> PowerVector {
        PowerVector::new(v.to_vec()).unwrap()
    }

    fn unit(n: usize) -> NoiseModel {
        NoiseModel::symmetric(1.0, n).unwrap()
    }

    fn set(members: &[usize]) -> Subset {
        Subset::new(members.iter().map(|i| i - 1).collect())
    }

    #[test]
    fn sat_examples() {
        let r = rv(&[0.5, 1.5]);
        assert_eq!(sat(&pv(&[8.0, 7.0]), &r, &unit(2)).unwrap(), set(&[1, 2]));
        assert_eq!(sat(&pv(&[9.0, 8.0]), &r, &unit(2)).unwrap(), Subset::empty());
        assert_eq!(sat(&pv(&[7.5, 7.5]), &r, &unit(2)).unwrap(), set(&[1, 2]));
        assert_eq!(
            sat(&pv(&[7.5, 7.5]), &rv(&[0.1, 1.9]), &unit(2)),
            Err(Error::NotAMember)
        );
    }

    #[test]
    fn dep_examples() {
        let r = rv(&[0.5, 1.5]);
        let x = pv(&[8.0, 7.0]);
        assert_eq!(dep(&x, 1, &r, &unit(2)).unwrap(), set(&[2]));
        assert_eq!(dep(&x, 0, &r, &unit(2)).unwrap(), set(&[1, 2]));
        let interior = pv(&[9.0, 8.0]);
        assert_eq!(dep(&interior, 0, &r, &unit(2)).unwrap(), Subset::empty());
        assert_eq!(dep(&interior, 1, &r, &unit(2)).unwrap(), Subset::empty());
        assert!(dep(&x, 2, &r, &unit(2)).is_err());
    }

    #[test]
    fn sort_and_lex_examples() {
        assert_eq!(sort_desc(&[3.0, 12.0]), vec![12.0, 3.0]);
        assert_eq!(sort_desc(&[7.5, 7.5]), vec![7.5, 7.5]);
        assert_eq!(sort_desc(&[2.071, 12.929, 0.1]), vec![12.929, 2.071, 0.1]);

        assert!(lex_leq(&[12.929, 2.071], &[13.851, 0.149]).unwrap());
        assert!(lex_leq(&[7.5, 7.5], &[7.5, 7.5]).unwrap());
        assert!(!lex_leq(&[13.851, 0.149], &[12.929, 2.071]).unwrap());
        assert!(lex_leq(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn distinct_levels_cluster_numeric_ties() {
        let l = DistinctLevels::new(&[7.5, 7.5 + 1e-9, 3.0], true);
        assert_eq!(l.values.len(), 2);
        assert_eq!(l.level_of, vec![0, 0, 1]);
        let l = DistinctLevels::new(&[3.0, 1.0, 2.0], false);
        assert_eq!(l.level_of, vec![2, 0, 1]);
    }

    #[test]
    fn lex_optimal_examples() {
        let r = rv(&[0.5, 1.5]);
        assert!(is_lex_optimal_base(&pv(&[7.5, 7.5]), &r, &unit(2)).unwrap());
        assert!(!is_lex_optimal_base(&pv(&[8.0, 7.0]), &r, &unit(2)).unwrap());

        let r = rv(&[0.1, 1.9]);
        let top = sum_power(&rv(&[1.9]), &unit(1));
        let x = pv(&[15.0 - top, top]);
        assert!((x[0] - 2.071).abs() < 1e-3);
        assert!(is_lex_optimal_base(&x, &r, &unit(2)).unwrap());

        assert_eq!(
            is_lex_optimal_base(&pv(&[9.0, 8.0]), &rv(&[0.5, 1.5]), &unit(2)),
            Err(Error::NotABase)
        );
    }

    #[test]
    fn minmax_examples() {
        let r = rv(&[1.0, 1.0]);
        let step = 1e-4 * 15.0;
        assert!(is_minmax(&pv(&[7.5, 7.5]), &r, &unit(2), step).unwrap());
        assert!(!is_minmax(&pv(&[3.0, 12.0]), &r, &unit(2), step).unwrap());

        let r = rv(&[0.1, 1.9]);
        let top = sum_power(&rv(&[1.9]), &unit(1));
        assert!(is_minmax(&pv(&[15.0 - top, top]), &r, &unit(2), step).unwrap());
        assert_eq!(
            is_minmax(&pv(&[9.0, 8.0]), &rv(&[0.5, 1.5]), &unit(2), step),
            Err(Error::NotABase)
        );
    }

    #[test]
    fn capacity_region_mirrored_certificate() {
        let cap = CapacityRegion::new(&pv(&[1.0, 1.0]), &unit(2)).unwrap();
        let half = cap.total_rank() / 2.0;
        assert!(is_lex_optimal_in(&cap, &[half, half]).unwrap());
        assert!(is_minmax_in(&cap, &[half, half], 1e-4).unwrap());
        let v = cap.vertex_coords(&[0, 1]);
        assert!(!is_lex_optimal_in(&cap, &v).unwrap());
        assert!(!is_minmax_in(&cap, &v, 1e-4).unwrap());
    }

    #[test]
    fn vertex_chain_sets_are_tight() {
        let region = PowerRegion::new(rv(&[0.3, 1.2, 0.7]), unit(3)).unwrap();
        for perm in Permutation::all(3) {
            let q = region.vertex_coords(perm.order());
            let tight = tight_table(&region, &q).unwrap();
            let mut mask = 0;
            for &i in perm.order() {
                mask |= 1 << i;
                assert!(tight[mask]);
            }
        }
    }
}
