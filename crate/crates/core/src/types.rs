//! Domain value types shared by every module.
//!
//! Node indices are stored 0-based. Anything user-facing (permutation wire
//! format, CLI output) renders them 1-based.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

fn check_entries(field: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(field, "must contain at least one entry"));
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::invalid(
                field,
                format!("entry {} is {v}, expected a finite non-negative number", i + 1),
            ));
        }
    }
    Ok(())
}

/// Per-node transmission rates in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(Vec<f64>);

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        check_entries("rates", &rates)?;
        Ok(Self(rates))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for RateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Per-node transmit powers in watts (linear scale).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        check_entries("powers", &powers)?;
        Ok(Self(powers))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl Index<usize> for PowerVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// A bijection on the node index set. `order()[k]` is the node placed at
/// position `k`; the receiver decodes from the last position to the first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    /// Builds a permutation from 0-based indices.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::InvalidPermutation("empty order".into()));
        }
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n {
                return Err(Error::InvalidPermutation(format!(
                    "index {} out of range 1..={n}",
                    i + 1
                )));
            }
            if seen[i] {
                return Err(Error::InvalidPermutation(format!(
                    "index {} appears more than once",
                    i + 1
                )));
            }
            seen[i] = true;
        }
        Ok(Self(order))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.0
    }

    /// Receiver processing order: last position first.
    pub fn decoding_order(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().rev().copied()
    }

    /// Parses the `>`-joined 1-based wire format, e.g. `"2>1"`.
    pub fn parse_wire(s: &str) -> Result<Self> {
        let order = s
            .split('>')
            .map(|tok| {
                let tok = tok.trim();
                match tok.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(Error::InvalidPermutation(format!(
                        "bad node index {tok:?} in {s:?}"
                    ))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(order)
    }

    /// All permutations of `0..n` in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut current: Vec<usize> = (0..n).collect();
        let mut out = vec![Permutation(current.clone())];
        // next lexicographic permutation
        while let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) {
            let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap();
            current.swap(i - 1, j);
            current[i..].reverse();
            out.push(Permutation(current.clone()));
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(">")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

/// Additive Gaussian noise power and per-node channel gains.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    sigma_sq: f64,
    gains: Vec<f64>,
}

impl NoiseModel {
    pub fn new(sigma_sq: f64, gains: Vec<f64>) -> Result<Self> {
        if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
            return Err(Error::invalid("noise", format!("{sigma_sq} is not a positive power")));
        }
        if gains.is_empty() {
            return Err(Error::invalid("gains", "must contain at least one entry"));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::invalid("gains", format!("{g} is not a positive gain")));
        }
        Ok(Self { sigma_sq, gains })
    }

    /// Unit gains for `n` nodes.
    pub fn symmetric(sigma_sq: f64, n: usize) -> Result<Self> {
        Self::new(sigma_sq, vec![1.0; n])
    }

    pub fn from_db(db: f64, gains: Vec<f64>) -> Result<Self> {
        Self::new(db_to_linear(db), gains)
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.gains.iter().all(|&g| g == 1.0)
    }

    /// Same gains, noise power scaled by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.sigma_sq * c, self.gains.clone())
    }

    /// Restricts the gain vector to the listed nodes.
    pub fn restrict(&self, nodes: &[usize]) -> Self {
        Self {
            sigma_sq: self.sigma_sq,
            gains: nodes.iter().map(|&i| self.gains[i]).collect(),
        }
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.gains.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.gains.len(),
            });
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// A subset of the ground set, kept as sorted 0-based indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self(members)
    }

    pub fn from_mask(mask: u64) -> Self {
        Self((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&i) if i >= n => Err(Error::InvalidSubset { index: i, n }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        f.write_str("}")
    }
}
