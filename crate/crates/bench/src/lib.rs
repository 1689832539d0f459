//! Shared fixtures for the benchmarks.

use ouhaar::ProcessParams;

/// Unit diffusion with the given mean-reversion rate.
pub fn unit_params(alpha: f64) -> ProcessParams {
    ProcessParams::from_rates(1.0, alpha).expect("benchmark parameters are valid")
}

/// `count` points of `(0, 1)` that are not dyadic, spread evenly.
pub fn off_grid_points(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| (i as f64 + 0.37) / count as f64)
        .collect()
}
