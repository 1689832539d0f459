//! Multiresolution construction of the Wiener and Ornstein-Uhlenbeck
//! processes on `[0, 1]` from compactly supported basis elements.
//!
//! Both processes are expanded as `X_t = Σ f_{n,k}(t) ξ_{n,k}` with
//! independent standard normal `ξ`. Each element `f_{n,k}` lives on a dyadic
//! interval, and the intervals of one level partition `[0, 1]`. At a dyadic
//! point of level `N` every element of level `n > N` vanishes, so evaluating
//! the expansion there stops after `N + 1` terms. The expansion can be
//! refined top-down: each new midpoint is drawn from the bridge law of its
//! segment.

pub mod basis;
pub mod bridge;
pub mod covariance;
pub mod dyadic;
pub mod error;
pub mod fpt;
pub mod hyper;
pub mod params;
pub mod rng;
pub mod sampler;

pub use basis::{
    basis_eval, haar_eval, locate_index, locate_index_dyadic, phi_eval, phi_star_eval, psi_eval,
    psi_star_eval, star_inner_eval, BasisIndex,
};
pub use bridge::{
    bridge, conditional_density_check, ou_bridge, ou_transition_density, wiener_bridge,
    wiener_transition_density, BridgeStats, Conditioning,
};
pub use covariance::{
    cov_partial_sum, cov_telescoped, head_sum, ou_cov_exact, tail_identity, telescope_trace,
    variance_series, wiener_cov_exact, CovarianceKernel, RecurrenceScale, TelescopeTrace,
    MAX_SERIES_LEVEL,
};
pub use dyadic::{binary_digits, binary_digits_f64, terminal_level, BinaryDigits, DyadicRational};
pub use error::{Error, Result};
pub use fpt::{disagrees_with_scan, first_passage_bracket, scan_grid, FptResult};
pub use params::{ProcessKind, ProcessParams};
pub use rng::{path_seed, CoefficientGenerator};
pub use sampler::{
    conditional_mean_path, Ensemble, GridPath, LevelBridge, PathExpansion, DEFAULT_MAX_LEVEL,
};
