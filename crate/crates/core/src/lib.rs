//! Min-max fair power scheduling for Gaussian multi-access channels.
//!
//! The feasible received-power region of a rate vector is a contra-polymatroid;
//! its min-max fair base is the base closest to the equal-allocation point and
//! is realised by time sharing between successive-decoding vertices. The crate
//! provides the polyhedral machinery ([`polymatroid`]), the min-max solvers
//! ([`solver`]), collecting-period schedules ([`scheduling`]) and a Monte
//! Carlo network-lifetime simulator ([`sim`]). The `macfair` binary wraps them
//! ([`cli`]).

pub mod cli;
pub mod error;
pub mod polymatroid;
pub mod scheduling;
pub mod sim;
pub mod solver;
pub mod types;

pub use error::{Error, Result};
pub use types::{NoiseModel, Permutation, PowerVector, RateVector, Subset};
