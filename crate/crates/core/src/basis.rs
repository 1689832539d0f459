//! The Haar system, the Schauder tents `Ψ_{n,k}` of the Wiener process and
//! the hyperbolic elements `Φ_{n,k}` of the Ornstein-Uhlenbeck process.
//!
//! Index conventions: for `n >= 1` the element `(n, k)` with
//! `0 <= k < 2^(n-1)` lives on `[k 2^(1-n), (k+1) 2^(1-n)]` and peaks at the
//! midpoint `(2k+1) 2^-n`, which is a point of `D_n` not in `D_(n-1)`. Level
//! 0 holds the single element `(0, 0)` spanning `[0, 1]`; levels below 0 only
//! occur in the bi-infinite extension, always with `k = 0`.
//!
//! Every element of level `n > N` is evaluated at a point of `D_N` through
//! an argument that is exactly zero, so the vanishing is structural.

use crate::dyadic::{DyadicRational, MAX_DYADIC_LEVEL};
use crate::error::{domain, Result};
use crate::hyper::sinhc_combo;
use crate::params::{ProcessKind, ProcessParams};

/// Finest resolution level accepted by a [`BasisIndex`].
pub const MAX_BASIS_LEVEL: i32 = 62;
/// Coarsest level accepted in the bi-infinite extension.
pub const MIN_BASIS_LEVEL: i32 = -62;

/// Resolution `n` and translation `k` of one basis element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    n: i32,
    k: u64,
}

impl BasisIndex {
    pub const ROOT: Self = Self { n: 0, k: 0 };

    pub fn new(n: i32, k: u64) -> Result<Self> {
        if !(MIN_BASIS_LEVEL..=MAX_BASIS_LEVEL).contains(&n) {
            return domain(format!(
                "level {n} outside [{MIN_BASIS_LEVEL}, {MAX_BASIS_LEVEL}]"
            ));
        }
        let count = Self::count_at(n);
        if k >= count {
            return domain(format!(
                "translation {k} out of range for level {n} (< {count})"
            ));
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> i32 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Number of elements at level `n`.
    pub fn count_at(n: i32) -> u64 {
        if n <= 1 {
            1
        } else {
            1u64 << (n - 1)
        }
    }

    /// Support clipped to `[0, 1]`.
    pub fn support(&self) -> (f64, f64) {
        if self.n <= 0 {
            return (0.0, 1.0);
        }
        let width = (1.0 - self.n as f64).exp2();
        (self.k as f64 * width, (self.k + 1) as f64 * width)
    }

    /// Support endpoints and midpoint as exact dyadics, for `1 <= n <= 53`.
    pub fn dyadic_support(&self) -> Result<(DyadicRational, DyadicRational, DyadicRational)> {
        if self.n < 1 || self.n as u32 > MAX_DYADIC_LEVEL {
            return domain(format!("no dyadic support for level {}", self.n));
        }
        let n = self.n as u32;
        Ok((
            DyadicRational::new(2 * self.k, n)?,
            DyadicRational::new(2 * self.k + 1, n)?,
            DyadicRational::new(2 * self.k + 2, n)?,
        ))
    }

    /// Membership under the half-open convention `[a, b)`, with `t = 1`
    /// belonging to the last support of each level.
    pub fn contains(&self, t: f64) -> bool {
        let (a, b) = self.support();
        a <= t && (t < b || (t == 1.0 && b == 1.0))
    }

    fn require_nonnegative(&self) -> Result<()> {
        if self.n < 0 {
            domain(format!(
                "level {} belongs to the bi-infinite extension",
                self.n
            ))
        } else {
            Ok(())
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        domain(format!("t = {t} lies outside [0, 1]"))
    }
}

/// Position of `t` relative to the tent of a level `n >= 1` element: the
/// distance to the nearest support endpoint, or `None` outside the support.
fn tent_offset(idx: &BasisIndex, t: f64) -> Option<f64> {
    let half = (-(idx.n as f64)).exp2();
    let left = (2 * idx.k) as f64 * half;
    let mid = (2 * idx.k + 1) as f64 * half;
    let right = (2 * idx.k + 2) as f64 * half;
    if t < left || t > right {
        None
    } else if t <= mid {
        Some(t - left)
    } else {
        Some(right - t)
    }
}

/// Haar function `h_{n,k}(t)` for `n >= 0`.
///
/// The midpoint takes the left (positive) value; the right endpoint of a
/// support belongs to the next support except at `t = 1`.
pub fn haar_eval(idx: BasisIndex, t: f64) -> Result<f64> {
    idx.require_nonnegative()?;
    check_t(t)?;
    if idx.n == 0 {
        return Ok(1.0);
    }
    let height = ((idx.n - 1) as f64 / 2.0).exp2();
    let half = (-(idx.n as f64)).exp2();
    let left = (2 * idx.k) as f64 * half;
    let mid = (2 * idx.k + 1) as f64 * half;
    let right = (2 * idx.k + 2) as f64 * half;
    Ok(if t < left || t > right {
        0.0
    } else if t <= mid {
        height
    } else if t < right || right == 1.0 {
        -height
    } else {
        0.0
    })
}

/// Schauder tent `Ψ_{n,k}(t) = sqrt(Γ) ∫_0^t h_{n,k}` for `n >= 0`.
pub fn psi_eval(params: &ProcessParams, idx: BasisIndex, t: f64) -> Result<f64> {
    idx.require_nonnegative()?;
    check_t(t)?;
    let root_gamma = params.gamma().sqrt();
    if idx.n == 0 {
        return Ok(root_gamma * t);
    }
    let width = (1.0 - idx.n as f64).exp2();
    Ok(match tent_offset(&idx, t) {
        Some(x) => root_gamma * x / width.sqrt(),
        None => 0.0,
    })
}

/// `Φ_{0,0}` and the first element `Φ*_{-m,0}` share one shape: a scaled
/// `sinh(αt)` whose normalization involves the span `2^m`.
fn head_element(params: &ProcessParams, span: f64, t: f64) -> f64 {
    let alpha = params.alpha();
    let scale = params.gamma().sqrt() * t / span.sqrt();
    if t == 0.0 || alpha == 0.0 {
        return scale;
    }
    scale * sinhc_combo(&[alpha * t], &[], &[alpha * span], -0.5 * alpha * span)
}

/// Ornstein-Uhlenbeck element `Φ_{n,k}(t)` for `n >= 0`.
///
/// On the rising half of the support this is
/// `sqrt(Γ/α) sinh(α x) / sqrt(sinh(α 2^(1-n)))` with `x` the distance to
/// the nearest endpoint; it reduces to [`psi_eval`] when `α = 0`.
pub fn phi_eval(params: &ProcessParams, idx: BasisIndex, t: f64) -> Result<f64> {
    idx.require_nonnegative()?;
    check_t(t)?;
    if params.kind() == ProcessKind::Wiener {
        return psi_eval(params, idx, t);
    }
    if idx.n == 0 {
        return Ok(head_element(params, 1.0, t));
    }
    let alpha = params.alpha();
    let width = (1.0 - idx.n as f64).exp2();
    Ok(match tent_offset(&idx, t) {
        Some(0.0) => 0.0,
        Some(x) => {
            params.gamma().sqrt() * x / width.sqrt()
                * sinhc_combo(&[alpha * x], &[], &[alpha * width], 0.0)
        }
        None => 0.0,
    })
}

/// `Ψ` or `Φ` according to the process kind.
pub fn basis_eval(params: &ProcessParams, idx: BasisIndex, t: f64) -> Result<f64> {
    match params.kind() {
        ProcessKind::Wiener => psi_eval(params, idx, t),
        ProcessKind::OrnsteinUhlenbeck => phi_eval(params, idx, t),
    }
}

fn require_star(idx: &BasisIndex) -> Result<f64> {
    if idx.n > 0 || idx.k != 0 {
        return domain(format!(
            "first bi-infinite elements need n <= 0 and k = 0, got ({}, {})",
            idx.n, idx.k
        ));
    }
    Ok((-(idx.n as f64)).exp2())
}

/// First element `Φ*_{n,0}`, `n <= 0`, of an expansion started on
/// `D_n = 2^(-n) Z`: `sqrt(Γ/α) e^(-α 2^(|n|-1)) sinh(αt) / sqrt(sinh(α 2^|n|))`.
pub fn phi_star_eval(params: &ProcessParams, idx: BasisIndex, t: f64) -> Result<f64> {
    let span = require_star(&idx)?;
    check_t(t)?;
    Ok(head_element(params, span, t))
}

/// First element `Ψ*_{n,0}(t) = sqrt(Γ / 2^|n|) t`, `n <= 0`.
pub fn psi_star_eval(params: &ProcessParams, idx: BasisIndex, t: f64) -> Result<f64> {
    let span = require_star(&idx)?;
    check_t(t)?;
    Ok(params.gamma().sqrt() * t / span.sqrt())
}

/// Element of level `n <= 0` inside a bi-infinite expansion that started
/// at a coarser level: the ordinary formula with support
/// `[0, 2^(1-n)]`, whose rising branch covers all of `[0, 1]`.
pub fn star_inner_eval(params: &ProcessParams, n: i32, t: f64) -> Result<f64> {
    if !(MIN_BASIS_LEVEL..=0).contains(&n) {
        return domain(format!(
            "inner bi-infinite level must be in [{MIN_BASIS_LEVEL}, 0], got {n}"
        ));
    }
    check_t(t)?;
    let width = (1.0 - n as f64).exp2();
    let alpha = params.alpha();
    let linear = params.gamma().sqrt() * t / width.sqrt();
    if t == 0.0 || alpha == 0.0 {
        return Ok(linear);
    }
    Ok(linear * sinhc_combo(&[alpha * t], &[], &[alpha * width], 0.0))
}

/// Index of the level-`n` element whose support holds `t`, i.e.
/// `k_n = floor(t 2^(n-1))` with `t = 1` clamped to the last support.
/// Level 0 yields the root element.
pub fn locate_index(t: f64, n: i32) -> Result<BasisIndex> {
    check_t(t)?;
    if !(0..=MAX_BASIS_LEVEL).contains(&n) {
        return domain(format!("cannot locate level {n}"));
    }
    if n <= 1 {
        return Ok(BasisIndex { n, k: 0 });
    }
    let count = BasisIndex::count_at(n);
    // Scaling by a power of two is exact.
    let k = ((t * ((n - 1) as f64).exp2()).floor() as u64).min(count - 1);
    Ok(BasisIndex { n, k })
}

/// [`locate_index`] for an exact dyadic point.
pub fn locate_index_dyadic(t: DyadicRational, n: i32) -> Result<BasisIndex> {
    if !(0..=MAX_BASIS_LEVEL).contains(&n) {
        return domain(format!("cannot locate level {n}"));
    }
    if n <= 1 {
        return Ok(BasisIndex { n, k: 0 });
    }
    let count = BasisIndex::count_at(n);
    let level = t.level() as i32;
    let shift = level - (n - 1);
    let k = if shift >= 0 {
        t.numer() >> shift
    } else {
        t.numer() << (-shift)
    };
    Ok(BasisIndex {
        n,
        k: k.min(count - 1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(n: i32, k: u64) -> BasisIndex {
        BasisIndex::new(n, k).unwrap()
    }

    fn ou(gamma: f64, alpha: f64) -> ProcessParams {
        ProcessParams::ornstein_uhlenbeck(gamma, alpha).unwrap()
    }

    fn w(gamma: f64) -> ProcessParams {
        ProcessParams::wiener(gamma).unwrap()
    }

    #[test]
    fn index_validation() {
        assert!(BasisIndex::new(1, 1).is_err());
        assert!(BasisIndex::new(3, 4).is_err());
        assert!(BasisIndex::new(3, 3).is_ok());
        assert!(BasisIndex::new(-2, 1).is_err());
        assert!(BasisIndex::new(63, 0).is_err());
        assert_eq!(idx(3, 1).support(), (0.25, 0.5));
        assert_eq!(idx(1, 0).support(), (0.0, 1.0));
    }

    #[test]
    fn haar_examples() {
        assert_eq!(haar_eval(idx(0, 0), 0.7).unwrap(), 1.0);
        assert_eq!(haar_eval(idx(1, 0), 0.25).unwrap(), 1.0);
        assert_eq!(haar_eval(idx(2, 0), 0.9).unwrap(), 0.0);
        // midpoint takes the positive branch, interior right endpoint is excluded
        assert_eq!(haar_eval(idx(2, 0), 0.25).unwrap(), 2f64.sqrt());
        assert_eq!(haar_eval(idx(2, 0), 0.5).unwrap(), 0.0);
        assert_eq!(haar_eval(idx(2, 1), 1.0).unwrap(), -(2f64.sqrt()));
        assert!(haar_eval(idx(-1, 0), 0.5).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_eval(&w(1.0), idx(1, 0), 0.5).unwrap(), 0.5);
        assert_eq!(psi_eval(&w(1.0), idx(2, 1), 0.5).unwrap(), 0.0);
        assert_eq!(psi_eval(&w(4.0), idx(0, 0), 0.25).unwrap(), 0.5);
    }

    #[test]
    fn phi_examples() {
        let expected = 0.5f64.sinh() / 1f64.sinh().sqrt();
        let got = phi_eval(&ou(1.0, 1.0), idx(1, 0), 0.5).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.480_685_529_873_747).abs() < 1e-14);

        assert_eq!(phi_eval(&ou(1.0, 1.0), idx(2, 1), 1.0).unwrap(), 0.0);
        assert!(phi_eval(&ou(1.0, 1.0), idx(2, 1), 0.75).unwrap() > 0.0);

        let p = ou(1.0, 1e-8);
        for j in 0..=64 {
            let t = 0.5 + j as f64 / 256.0;
            let phi = phi_eval(&p, idx(3, 2), t).unwrap();
            let psi = psi_eval(&p, idx(3, 2), t).unwrap();
            assert!((phi - psi).abs() <= 1e-6 * psi.abs());
        }
    }

    #[test]
    fn phi_root_matches_closed_form() {
        let p = ou(2.0, 1.5);
        for &t in &[0.1f64, 0.5, 1.0] {
            let expected =
                (2.0f64 / 1.5).sqrt() * (-0.75f64).exp() * (1.5 * t).sinh() / 1.5f64.sinh().sqrt();
            let got = phi_eval(&p, BasisIndex::ROOT, t).unwrap();
            assert!((got - expected).abs() < 1e-14 * expected);
        }
    }

    #[test]
    fn star_examples() {
        let p = ou(1.0, 1.0);
        let first = phi_star_eval(&p, BasisIndex::ROOT, 0.5).unwrap();
        assert_eq!(first, phi_eval(&p, BasisIndex::ROOT, 0.5).unwrap());

        let got = phi_star_eval(&p, idx(-3, 0), 1.0).unwrap();
        let expected = (-4f64).exp() * 1f64.sinh() / 8f64.sinh().sqrt();
        assert!((got - expected).abs() < 1e-15 * expected);
        assert!((got - 5.575_340_435_218e-4).abs() < 1e-15);
        assert_eq!(phi_star_eval(&p, idx(-5, 0), 0.0).unwrap(), 0.0);
        assert!(phi_star_eval(&p, idx(2, 1), 0.3).is_err());

        assert_eq!(psi_star_eval(&w(1.0), idx(-2, 0), 1.0).unwrap(), 0.5);
        assert_eq!(psi_star_eval(&w(1.0), BasisIndex::ROOT, 0.3).unwrap(), 0.3);
        assert_eq!(psi_star_eval(&w(3.0), idx(-4, 0), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn star_inner_matches_general_formula() {
        let p = ou(1.0, 0.7);
        // n = 0: support [0, 2], rising on [0, 1]
        let expected = (1.0f64 / 0.7).sqrt() * (0.7f64 * 0.6).sinh() / (0.7f64 * 2.0).sinh().sqrt();
        assert!((star_inner_eval(&p, 0, 0.6).unwrap() - expected).abs() < 1e-15);
        assert_eq!(star_inner_eval(&w(1.0), -1, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn locate_examples() {
        assert_eq!(locate_index(0.375, 3).unwrap(), idx(3, 1));
        assert_eq!(locate_index(0.0, 7).unwrap(), idx(7, 0));
        assert_eq!(locate_index(0.75, 2).unwrap(), idx(2, 1));
        assert_eq!(locate_index(1.0, 4).unwrap(), idx(4, 7));
        assert_eq!(locate_index(0.5, 2).unwrap(), idx(2, 1));
        let d = DyadicRational::new(3, 3).unwrap();
        assert_eq!(locate_index_dyadic(d, 3).unwrap(), idx(3, 1));
        assert_eq!(
            locate_index_dyadic(d, 10).unwrap(),
            locate_index(0.375, 10).unwrap()
        );
        assert_eq!(
            locate_index_dyadic(DyadicRational::ONE, 5).unwrap(),
            idx(5, 15)
        );
    }

    #[test]
    fn index_formula_from_digits() {
        // k_n = (1/2) sum_{i<n} a_i 2^(n-i)
        let t = DyadicRational::new(0b1_0110_1101, 9).unwrap();
        let digits = crate::dyadic::binary_digits(t, 9);
        for n in 1..=9 {
            let k: u64 = (1..n)
                .map(|i| (digits.digit(i as usize).unwrap() as u64) << (n - i))
                .sum::<u64>()
                / 2;
            assert_eq!(locate_index_dyadic(t, n).unwrap().k(), k);
        }
    }

    #[test]
    fn large_alpha_stays_finite() {
        let p = ou(1.0, 700.0);
        for n in 0..6 {
            let i = locate_index(0.3, n).unwrap();
            let v = phi_eval(&p, i, 0.3).unwrap();
            assert!(v.is_finite() && v >= 0.0);
        }
        // peak value of a coarse element approaches sqrt(Γ / 2α)
        let peak = phi_eval(&p, idx(1, 0), 0.5).unwrap();
        assert!((peak - (1.0f64 / 1400.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn vanishes_outside_support() {
        let p = ou(1.0, 3.0);
        let i = idx(4, 5);
        for &t in &[0.0, 0.6, 0.62, 0.76, 1.0] {
            assert_eq!(phi_eval(&p, i, t).unwrap(), 0.0);
        }
        assert!(phi_eval(&p, i, 0.7).unwrap() > 0.0);
    }
}
