//! Numerical and exact machinery for log-weighted multilinear multipliers on the torus.

pub mod calibration;
pub mod counterexample;
pub mod error;
pub mod exponents;
pub mod field;
pub mod lp_ops;
pub mod multiplier;
pub mod report;
pub mod shifted_lab;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent deterministic generator for substream `stream` of a run seed.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
