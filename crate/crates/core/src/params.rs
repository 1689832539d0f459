use crate::error::{domain, Result};

/// Which Gaussian process a basis or kernel describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Wiener,
    OrnsteinUhlenbeck,
}

/// Noise intensity, mean-reversion rate and process kind.
///
/// `gamma` is the variance per unit time of the driving white noise and
/// `alpha` the relaxation rate of the linear drift `-alpha * x`. A Wiener
/// process always carries `alpha == 0`; an Ornstein-Uhlenbeck process with
/// `alpha == 0` evaluates through exactly the same formulas as a Wiener one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    gamma: f64,
    alpha: f64,
    kind: ProcessKind,
}

/// Largest mean-reversion rate for which every routine stays finite.
pub const MAX_ALPHA: f64 = 700.0;

impl ProcessParams {
    pub fn wiener(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            gamma,
            alpha: 0.0,
            kind: ProcessKind::Wiener,
        })
    }

    pub fn ornstein_uhlenbeck(gamma: f64, alpha: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(0.0..=MAX_ALPHA).contains(&alpha) {
            return domain(format!("alpha must lie in [0, {MAX_ALPHA}], got {alpha}"));
        }
        Ok(Self {
            gamma,
            alpha,
            kind: ProcessKind::OrnsteinUhlenbeck,
        })
    }

    /// Wiener when `alpha == 0`, Ornstein-Uhlenbeck otherwise.
    pub fn from_rates(gamma: f64, alpha: f64) -> Result<Self> {
        if alpha == 0.0 {
            Self::wiener(gamma)
        } else {
            Self::ornstein_uhlenbeck(gamma, alpha)
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Effective mean-reversion rate (always 0 for the Wiener kind).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> ProcessKind {
        self.kind
    }

    /// True when the Wiener formulas apply exactly.
    pub fn is_driftless(&self) -> bool {
        self.alpha == 0.0
    }

    /// Deterministic contribution `x0 * exp(-alpha t)` of a nonzero initial
    /// condition. The expansions themselves always start from zero.
    pub fn initial_drift(&self, x0: f64, t: f64) -> f64 {
        x0 * (-self.alpha * t).exp()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        domain(format!("gamma must be positive and finite, got {gamma}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rates() {
        assert!(ProcessParams::wiener(0.0).is_err());
        assert!(ProcessParams::wiener(f64::NAN).is_err());
        assert!(ProcessParams::ornstein_uhlenbeck(1.0, -1e-3).is_err());
        assert!(ProcessParams::ornstein_uhlenbeck(1.0, 701.0).is_err());
    }

    #[test]
    fn zero_rate_is_driftless() {
        let p = ProcessParams::ornstein_uhlenbeck(2.0, 0.0).unwrap();
        assert!(p.is_driftless());
        assert_eq!(p.kind(), ProcessKind::OrnsteinUhlenbeck);
        assert_eq!(
            ProcessParams::from_rates(2.0, 0.0).unwrap().kind(),
            ProcessKind::Wiener
        );
    }

    #[test]
    fn drift_helper() {
        let p = ProcessParams::ornstein_uhlenbeck(1.0, 2.0).unwrap();
        assert_eq!(p.initial_drift(3.0, 0.0), 3.0);
        assert!((p.initial_drift(1.0, 0.5) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(
            ProcessParams::wiener(1.0).unwrap().initial_drift(1.5, 0.7),
            1.5
        );
    }
}
