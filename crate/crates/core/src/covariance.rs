//! Covariance kernels: the closed forms, the truncated basis sums that
//! must reproduce them, and the telescoping `(u_n, v_n)` sequences that
//! collapse the Ornstein-Uhlenbeck series to closed form.

use crate::basis::{basis_eval, locate_index, phi_star_eval, star_inner_eval, BasisIndex};
use crate::error::{domain, Result};
use crate::hyper::sinhc_combo;
use crate::params::ProcessParams;

/// Deepest level a truncated series may request. Beyond it the level-`n`
/// supports are finer than the spacing of doubles near 1.
pub const MAX_SERIES_LEVEL: u32 = 40;

/// Closed-form covariance of the process described by `params`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceKernel {
    params: ProcessParams,
}

impl CovarianceKernel {
    pub fn new(params: ProcessParams) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &ProcessParams {
        &self.params
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        ou_cov_exact(&self.params, t, s)
    }
}

/// `Γ min(t, s)`.
pub fn wiener_cov_exact(params: &ProcessParams, t: f64, s: f64) -> f64 {
    params.gamma() * t.min(s)
}

/// `(Γ/2α) e^(-α(t+s)) (e^(2α min(t,s)) - 1)`, evaluated as
/// `(Γ/2α)(1 - e^(-2α m)) e^(-α|t-s|)`; `Γ min(t, s)` when `α = 0`.
pub fn ou_cov_exact(params: &ProcessParams, t: f64, s: f64) -> f64 {
    let alpha = params.alpha();
    if alpha == 0.0 {
        return wiener_cov_exact(params, t, s);
    }
    let m = t.min(s);
    params.gamma() * -(-2.0 * alpha * m).exp_m1() / (2.0 * alpha) * (-alpha * (t - s).abs()).exp()
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        domain(format!("t = {t} lies outside [0, 1]"))
    }
}

fn check_series_level(levels: u32) -> Result<()> {
    if levels > MAX_SERIES_LEVEL {
        domain(format!(
            "series truncation {levels} exceeds {MAX_SERIES_LEVEL}"
        ))
    } else {
        Ok(())
    }
}

/// `Σ_{n=0}^{N} Σ_k f_{n,k}(t) f_{n,k}(s)`, visiting only the element of
/// each level whose support holds `t`.
///
/// For dyadic `t` and `s` of level at most `N` this equals the exact
/// covariance; otherwise the truncation error is `O(Γ 2^-N)`.
pub fn cov_partial_sum(params: &ProcessParams, t: f64, s: f64, levels: u32) -> Result<f64> {
    check_unit(t)?;
    check_unit(s)?;
    check_series_level(levels)?;
    let mut total = 0.0;
    for n in 0..=levels as i32 {
        let idx = locate_index(t, n)?;
        let ft = basis_eval(params, idx, t)?;
        if ft == 0.0 {
            continue;
        }
        total += ft * basis_eval(params, idx, s)?;
    }
    Ok(total)
}

/// `Σ_{n=0}^{N} f_{n,k_n}(t)^2`, the truncated variance series.
pub fn variance_series(params: &ProcessParams, t: f64, levels: u32) -> Result<f64> {
    cov_partial_sum(params, t, t, levels)
}

/// Argument scale of the `cosh` factor in the `v_n` recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecurrenceScale {
    /// `cosh(α 2^-n)`: the step between the tails `Σ_{i≥n}` and `Σ_{i>n}`.
    #[default]
    TailStep,
    /// `cosh(α 2^n)`. Kept so checks can demonstrate that it fails.
    PositivePower,
}

/// Telescoping data for a pair `t < s`.
///
/// With `A_n(x) = Σ_{i≥n} x_i 2^-i` the binary tail of `x` and
/// `B_n(s) = 2^(1-n) - A_n(s)`:
///
/// * `v_n = sinh(α A_n(t)) sinh(α B_n(s))`,
/// * `u_n` is the numerator of `f_{n,k_n}(t) f_{n,k_n}(s)`, so that
///   `f_{n,k_n}(t) f_{n,k_n}(s) = (Γ/α) u_n / sinh(α 2^(1-n))`.
///
/// `N0` is the first digit where `t` and `s` differ. When `α = 0` every
/// `sinh(α x)` is replaced by `x` (and `cosh` by 1), the Wiener limit of
/// the same identities.
#[derive(Debug, Clone, PartialEq)]
pub struct TelescopeTrace {
    alpha: f64,
    n0: usize,
    /// `u_1 ..= u_N0`.
    u: Vec<f64>,
    /// `v_1 ..= v_(N0+1)`.
    v: Vec<f64>,
}

/// Binary tail `Σ_{i≥n} x_i 2^-i`. The point 1 only has the all-ones
/// expansion, whose tail is `2^(1-n)`.
fn binary_tail(x: f64, n: usize) -> f64 {
    let scale = (n as f64 - 1.0).exp2();
    if x == 1.0 {
        return 1.0 / scale;
    }
    // both the scaling and fract are exact on doubles
    (x * scale).fract() / scale
}

fn binary_digit(x: f64, i: usize) -> u8 {
    if x == 1.0 {
        return 1;
    }
    ((x * (i as f64).exp2()).floor() % 2.0) as u8
}

impl TelescopeTrace {
    fn sh(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            x
        } else {
            (self.alpha * x).sinh()
        }
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// `u_n` for `1 <= n <= N0`.
    pub fn u(&self, n: usize) -> f64 {
        self.u[n - 1]
    }

    /// `v_n` for `1 <= n <= N0 + 1`.
    pub fn v(&self, n: usize) -> f64 {
        self.v[n - 1]
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u
    }

    pub fn v_values(&self) -> &[f64] {
        &self.v
    }

    /// Relative residuals `|v_n - 2 cosh(·) v_(n+1) - u_n| / scale` for
    /// `1 <= n < N0`, where `scale` is the largest of the three terms.
    pub fn recurrence_residuals(&self, scale: RecurrenceScale) -> Vec<f64> {
        (1..self.n0)
            .map(|n| {
                let arg = match scale {
                    RecurrenceScale::TailStep => (-(n as f64)).exp2(),
                    RecurrenceScale::PositivePower => (n as f64).exp2(),
                };
                let step = 2.0 * (self.alpha * arg).cosh() * self.v(n + 1);
                let size = self.v(n).abs().max(step.abs()).max(self.u(n).abs());
                if size == 0.0 {
                    0.0
                } else {
                    (self.v(n) - step - self.u(n)).abs() / size
                }
            })
            .collect()
    }

    pub fn max_recurrence_residual(&self, scale: RecurrenceScale) -> f64 {
        self.recurrence_residuals(scale)
            .into_iter()
            .fold(0.0, f64::max)
    }

    /// Both sides of
    /// `Σ_{n<N0} u_n / sinh(α 2^(1-n)) = v_1 / sinh(α) - v_N0 / sinh(α 2^(1-N0))`.
    pub fn telescoped_sum(&self) -> (f64, f64) {
        let width = |n: usize| (1.0 - n as f64).exp2();
        let lhs = (1..self.n0).map(|n| self.u(n) / self.sh(width(n))).sum();
        let rhs = self.v(1) / self.sh(1.0) - self.v(self.n0) / self.sh(width(self.n0));
        (lhs, rhs)
    }
}

/// Builds the `(u_n, v_n)` sequences for `t < s`. Equal arguments belong
/// to [`variance_series`].
pub fn telescope_trace(params: &ProcessParams, t: f64, s: f64) -> Result<TelescopeTrace> {
    check_unit(t)?;
    check_unit(s)?;
    if t == s {
        return domain("telescope_trace needs t < s; use variance_series for t = s");
    }
    if t > s {
        return domain(format!("telescope_trace needs t < s, got t = {t}, s = {s}"));
    }
    let n0 = (1..)
        .find(|&i| binary_digit(t, i) != binary_digit(s, i))
        .expect("distinct doubles differ in some binary digit");
    let mut trace = TelescopeTrace {
        alpha: params.alpha(),
        n0,
        u: Vec::with_capacity(n0),
        v: Vec::with_capacity(n0 + 1),
    };
    let complement = |x: f64, n: usize| (1.0 - n as f64).exp2() - binary_tail(x, n);
    for n in 1..=n0 {
        let half = (-(n as f64)).exp2();
        let (ta, sa) = (binary_tail(t, n + 1), binary_tail(s, n + 1));
        let u = if n == n0 {
            trace.sh(ta) * trace.sh(complement(s, n + 1))
        } else if binary_digit(t, n) == 0 {
            trace.sh(ta) * trace.sh(sa)
        } else {
            trace.sh(half - ta) * trace.sh(half - sa)
        };
        trace.u.push(u);
    }
    for n in 1..=n0 + 1 {
        let v = trace.sh(binary_tail(t, n)) * trace.sh(complement(s, n));
        trace.v.push(v);
    }
    Ok(trace)
}

/// Covariance from the telescoped closed form
/// `(Γ/2α) [2 v_1 / sinh(α) + 2 e^(-α) sinh(αt) sinh(αs) / sinh(α)]` with
/// `v_1 = sinh(α t) sinh(α (1 - s))`, `t < s`. Equal arguments go through
/// [`variance_series`] at [`MAX_SERIES_LEVEL`].
pub fn cov_telescoped(params: &ProcessParams, t: f64, s: f64) -> Result<f64> {
    check_unit(t)?;
    check_unit(s)?;
    if t == s {
        return variance_series(params, t, MAX_SERIES_LEVEL);
    }
    let (lo, hi) = if t < s { (t, s) } else { (s, t) };
    let alpha = params.alpha();
    // v_1's arguments: the full tails A_1(lo) = lo and B_1(hi) = 1 - hi.
    let (a1, b1) = (binary_tail(lo, 1), 1.0 - binary_tail(hi, 1));
    // sinh(αx) = αx sinhc(αx) turns each term into a product of sinhc ratios.
    let bridge_part = lo * b1 * sinhc_combo(&[alpha * a1, alpha * b1], &[alpha], &[], 0.0);
    let head_part = lo * hi * sinhc_combo(&[alpha * lo, alpha * hi], &[alpha], &[], -alpha);
    Ok(params.gamma() * (bridge_part + head_part))
}

/// Both sides of `Σ_{n≥1} 1/sinh(α 2^n) = e^(-α) / sinh(α)`.
///
/// Terms are generated until one drops below `1e-18` of the first, then
/// added smallest first with Neumaier compensation. For small `α` the sum
/// is near `1/α` and plain summation is off by an ulp there.
pub fn tail_identity(alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return domain(format!("tail identity needs alpha > 0, got {alpha}"));
    }
    // 1/sinh(x) = -2 e^-x / expm1(-2x), accurate for small and large x
    let csch = |x: f64| -2.0 * (-x).exp() / (-2.0 * x).exp_m1();
    let mut terms = Vec::new();
    let mut arg = alpha;
    loop {
        arg *= 2.0;
        let term = csch(arg);
        terms.push(term);
        if term <= 1e-18 * terms[0] || !arg.is_finite() {
            break;
        }
    }
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for &term in terms.iter().rev() {
        let next = sum + term;
        carry += if sum.abs() >= term.abs() {
            (sum - next) + term
        } else {
            (term - next) + sum
        };
        sum = next;
    }
    let rhs = 2.0 / (2.0 * alpha).exp_m1();
    Ok((sum + carry, rhs))
}

/// Head of the bi-infinite expansion started on `D_(-N)`:
/// `f*_{-N,0}(t) f*_{-N,0}(s) + Σ_{-N<n≤0} f*_{n,0}(t) f*_{n,0}(s)`,
/// the first term using the first-element formula.
///
/// The sum reproduces `f_{0,0}(t) f_{0,0}(s)` for every `N`.
pub fn head_sum(params: &ProcessParams, t: f64, s: f64, depth: u32) -> Result<f64> {
    check_unit(t)?;
    check_unit(s)?;
    let first_level = -(depth as i32);
    let first = BasisIndex::new(first_level, 0)?;
    let mut total = phi_star_eval(params, first, t)? * phi_star_eval(params, first, s)?;
    for n in first_level + 1..=0 {
        total += star_inner_eval(params, n, t)? * star_inner_eval(params, n, s)?;
    }
    Ok(total)
}

/// `Σ_{-N≤n≤0} f*_{n,0}(t) f*_{n,0}(s)` with every term taken from the
/// inner-element formula; it converges to `f_{0,0}(t) f_{0,0}(s)` only as
/// `N → ∞`.
pub fn inner_head_sum(params: &ProcessParams, t: f64, s: f64, depth: u32) -> Result<f64> {
    check_unit(t)?;
    check_unit(s)?;
    let mut total = 0.0;
    for n in -(depth as i32)..=0 {
        total += star_inner_eval(params, n, t)? * star_inner_eval(params, n, s)?;
    }
    Ok(total)
}
