//! Shared fixtures for the criterion benchmarks.

use wavekin::{DispersionParams, DomainSpec, FrequencyGrid, ModeField};

/// Default-domain grid at refinement `n` with `η = √2`.
pub fn grid(n: u32) -> FrequencyGrid {
    let dispersion = DispersionParams::new(std::f64::consts::SQRT_2).expect("positive eta");
    FrequencyGrid::build(DomainSpec::default(), dispersion, n).expect("default domain is valid")
}

/// A sample from the invariant measure, seeded deterministically.
pub fn invariant_field(grid: &FrequencyGrid, seed: u64) -> ModeField {
    wavekin::measures::sample_invariant(grid, &mut wavekin::rng::init_stream(seed, 0))
        .expect("grid is nonempty")
}
