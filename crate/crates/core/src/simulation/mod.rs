//! Seeded Monte Carlo: samplers for the five settings, MCAR masks, the
//! replicated variance harness and table reproduction.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, outer, inner, purpose)`, so results do not depend on thread count
//! or scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub mod mc;
pub mod mcar;
pub mod settings;
pub mod tables;

pub use mc::{mean_sample_kappa, run_mc, theoretical_variance, MCResult, MethodStats};
pub use mcar::{apply_mcar, apply_mcar_with};
pub use settings::{reference_model, sample, Distribution, Sampler, SimSetting};
pub use tables::{reproduce_table, ReproduceOptions, TableId, TableReport, TableRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Sample = 1,
    Mask = 2,
}

/// Deterministic sub-stream for one replicate and purpose.
pub fn rng_for(seed: u64, outer: usize, inner: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((outer as u64) << 40) | ((inner as u64) << 4) | purpose as u64);
    rng
}
