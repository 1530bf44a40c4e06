//! Shared scenario builders for the benchmarks.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use towershare_core::geometry::Region;
use towershare_core::metrics::RadioParams;
use towershare_core::network::{RadiusSpec, ScenarioConfig};

/// The desk-scale two-operator scenario used throughout the benchmarks.
pub fn desk_scenario() -> ScenarioConfig {
    ScenarioConfig {
        n_operators: 2,
        colocation_p: 0.5,
        lambda_bs: 1e-6,
        lambda_u: 1e-3,
        betas: vec![0.8],
        radius_r: RadiusSpec::Optimal,
        bandwidth_w: 1e7,
        region: Region::torus(4000.0, 4000.0),
        alpha: 1.0,
        seed: 42,
        radio: RadioParams::default(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
