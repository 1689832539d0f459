//! Transition densities and bridge laws of the Wiener and
//! Ornstein-Uhlenbeck processes.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::hyper::sinhc_combo;
use crate::params::ProcessParams;

/// Gaussian law of the process at an interior time given both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeStats {
    pub mean: f64,
    pub std: f64,
}

impl BridgeStats {
    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    /// Density of `N(mean, std^2)` at `y`.
    pub fn density(&self, y: f64) -> f64 {
        gaussian_ln_density(y - self.mean, self.variance()).exp()
    }

    /// `P(Y >= level)` for `Y ~ N(mean, std^2)`.
    pub fn upper_tail(&self, level: f64) -> f64 {
        if self.std == 0.0 {
            return if self.mean >= level { 1.0 } else { 0.0 };
        }
        let z = (level - self.mean) / (self.std * std::f64::consts::SQRT_2);
        0.5 * statrs::function::erf::erfc(z)
    }
}

/// Two framing observations `x` at `t_x` and `z` at `t_z` and the
/// interior time `t_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conditioning {
    t_x: f64,
    t_y: f64,
    t_z: f64,
    x: f64,
    z: f64,
}

impl Conditioning {
    pub fn new(t_x: f64, t_y: f64, t_z: f64, x: f64, z: f64) -> Result<Self> {
        if !(t_x < t_y && t_y < t_z) {
            return domain(format!(
                "bridge times must satisfy t_x < t_y < t_z, got ({t_x}, {t_y}, {t_z})"
            ));
        }
        if !(x.is_finite() && z.is_finite()) {
            return domain("bridge endpoint values must be finite");
        }
        Ok(Self {
            t_x,
            t_y,
            t_z,
            x,
            z,
        })
    }

    /// Conditioning at the midpoint of `[t_x, t_z]`.
    pub fn midpoint(t_x: f64, t_z: f64, x: f64, z: f64) -> Result<Self> {
        Self::new(t_x, 0.5 * (t_x + t_z), t_z, x, z)
    }

    pub fn times(&self) -> (f64, f64, f64) {
        (self.t_x, self.t_y, self.t_z)
    }

    pub fn values(&self) -> (f64, f64) {
        (self.x, self.z)
    }
}

fn gaussian_ln_density(dx: f64, variance: f64) -> f64 {
    -0.5 * (dx * dx / variance + (2.0 * PI * variance).ln())
}

fn check_times(t0: f64, t: f64) -> Result<f64> {
    let dt = t - t0;
    if dt > 0.0 {
        Ok(dt)
    } else {
        domain(format!("transition needs t > t0, got t0 = {t0}, t = {t}"))
    }
}

/// Mean and variance of `X_t` given `X_t0 = x0`.
pub fn transition_moments(params: &ProcessParams, t0: f64, x0: f64, t: f64) -> Result<(f64, f64)> {
    let dt = check_times(t0, t)?;
    let alpha = params.alpha();
    if alpha == 0.0 {
        return Ok((x0, params.gamma() * dt));
    }
    // (Γ/2α)(1 - e^{-2α dt}) without cancellation for small α dt
    let variance = params.gamma() * -(-2.0 * alpha * dt).exp_m1() / (2.0 * alpha);
    Ok((x0 * (-alpha * dt).exp(), variance))
}

/// `ln P(X_t = x | X_t0 = x0)` for either process kind.
pub fn ln_transition_density(
    params: &ProcessParams,
    t0: f64,
    x0: f64,
    t: f64,
    x: f64,
) -> Result<f64> {
    let (mean, variance) = transition_moments(params, t0, x0, t)?;
    Ok(gaussian_ln_density(x - mean, variance))
}

/// Gaussian density with mean `x0` and variance `Γ (t - t0)`.
pub fn wiener_transition_density(
    params: &ProcessParams,
    t0: f64,
    x0: f64,
    t: f64,
    x: f64,
) -> Result<f64> {
    let dt = check_times(t0, t)?;
    Ok(gaussian_ln_density(x - x0, params.gamma() * dt).exp())
}

/// Gaussian density with mean `x0 e^(-α Δ)` and variance
/// `(Γ/2α)(1 - e^(-2α Δ))`; the Wiener density when `α = 0`.
pub fn ou_transition_density(
    params: &ProcessParams,
    t0: f64,
    x0: f64,
    t: f64,
    x: f64,
) -> Result<f64> {
    Ok(ln_transition_density(params, t0, x0, t, x)?.exp())
}

/// Linear interpolation of the endpoints with variance
/// `Γ (t_y - t_x)(t_z - t_y) / (t_z - t_x)`.
pub fn wiener_bridge(params: &ProcessParams, cond: &Conditioning) -> BridgeStats {
    let a = cond.t_y - cond.t_x;
    let b = cond.t_z - cond.t_y;
    let c = cond.t_z - cond.t_x;
    BridgeStats {
        mean: (b * cond.x + a * cond.z) / c,
        std: (params.gamma() * a * b / c).sqrt(),
    }
}

/// Bridge of the Ornstein-Uhlenbeck process:
/// mean `[sinh(α b) x + sinh(α a) z] / sinh(α c)` and variance
/// `(Γ/α) sinh(α a) sinh(α b) / sinh(α c)` with `a = t_y - t_x`,
/// `b = t_z - t_y`, `c = t_z - t_x`. Routed to [`wiener_bridge`] when `α = 0`.
pub fn ou_bridge(params: &ProcessParams, cond: &Conditioning) -> BridgeStats {
    let alpha = params.alpha();
    if alpha == 0.0 {
        return wiener_bridge(params, cond);
    }
    let a = cond.t_y - cond.t_x;
    let b = cond.t_z - cond.t_y;
    let c = cond.t_z - cond.t_x;
    let (aa, ab, ac) = (alpha * a, alpha * b, alpha * c);
    let weight_x = b / c * sinhc_combo(&[ab], &[ac], &[], 0.0);
    let weight_z = a / c * sinhc_combo(&[aa], &[ac], &[], 0.0);
    let variance = params.gamma() * a * b / c * sinhc_combo(&[aa, ab], &[ac], &[], 0.0);
    BridgeStats {
        mean: weight_x * cond.x + weight_z * cond.z,
        std: variance.sqrt(),
    }
}

/// Bridge law for the process kind carried by `params`.
pub fn bridge(params: &ProcessParams, cond: &Conditioning) -> BridgeStats {
    ou_bridge(params, cond)
}

/// `ln P(X_ty = y | x, z)` from the Markov factorization
/// `P(y | x) P(z | y) / P(z | x)`.
pub fn ln_conditional_density(params: &ProcessParams, cond: &Conditioning, y: f64) -> Result<f64> {
    let first = ln_transition_density(params, cond.t_x, cond.x, cond.t_y, y)?;
    let second = ln_transition_density(params, cond.t_y, y, cond.t_z, cond.z)?;
    let whole = ln_transition_density(params, cond.t_x, cond.x, cond.t_z, cond.z)?;
    Ok(first + second - whole)
}

/// Conditional density assembled from transition densities; an oracle for
/// [`BridgeStats::density`].
pub fn conditional_density_check(
    params: &ProcessParams,
    cond: &Conditioning,
    y: f64,
) -> Result<f64> {
    Ok(ln_conditional_density(params, cond, y)?.exp())
}
