//! Counter-addressed uniform draws.
//!
//! The ChaCha key is derived from the seed, the stream is the run index and
//! the keystream position encodes `(period, node)`. Any draw can be produced
//! without producing the ones before it, so results do not depend on which
//! thread simulates which run or which strategy asks first.

use rand_chacha::ChaCha12Rng;
use rand::{RngCore, SeedableRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawKey {
    pub seed: u64,
    pub run: u64,
}

impl DrawKey {
    pub fn new(seed: u64, run: u64) -> Self {
        Self { seed, run }
    }

    fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.run);
        rng
    }

    /// Uniform draws on (0, 1] for every node of one period.
    pub fn period_uniforms(&self, period: u64, n_nodes: usize) -> Vec<f64> {
        let mut rng = self.rng();
        // two 32-bit words per u64 draw
        rng.set_word_pos(u128::from(period) * n_nodes as u128 * 2);
        (0..n_nodes).map(|_| open_unit(rng.next_u64())).collect()
    }

    /// The draw for a single `(period, node)` cell.
    pub fn uniform(&self, period: u64, node: usize, n_nodes: usize) -> f64 {
        let mut rng = self.rng();
        rng.set_word_pos((u128::from(period) * n_nodes as u128 + node as u128) * 2);
        open_unit(rng.next_u64())
    }
}

/// Maps 64 random bits to a multiple of 2⁻⁵³ in (0, 1].
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}
