//! Overflow- and cancellation-safe hyperbolic ratios.
//!
//! Every closed form in this crate is a product of `sinh` factors. They are
//! rewritten in terms of `sinhc(y) = sinh(y) / y`, which is exactly 1 at
//! `y = 0` so the Wiener formulas fall out without a 0/0, and switch to
//! log space once an argument passes [`LOG_SPACE_THRESHOLD`].

/// Below this argument `sinhc` uses its Taylor polynomial.
pub const TAYLOR_THRESHOLD: f64 = 1e-4;
/// Above this argument products of `sinhc` are formed in log space.
pub const LOG_SPACE_THRESHOLD: f64 = 30.0;

/// `sinh(y) / y`, even in `y`, equal to 1 at the origin.
pub fn sinhc(y: f64) -> f64 {
    let y = y.abs();
    if y < TAYLOR_THRESHOLD {
        let y2 = y * y;
        1.0 + y2 / 6.0 + y2 * y2 / 120.0
    } else {
        y.sinh() / y
    }
}

/// `ln(sinh(y) / y)` without overflow for large `y`.
pub fn ln_sinhc(y: f64) -> f64 {
    let y = y.abs();
    if y <= LOG_SPACE_THRESHOLD {
        sinhc(y).ln()
    } else {
        y - std::f64::consts::LN_2 + (-(-2.0 * y).exp()).ln_1p() - y.ln()
    }
}

/// `exp(log_factor) * prod sinhc(num) / (prod sinhc(den) * prod sqrt(sinhc(den_sqrt)))`.
pub fn sinhc_combo(num: &[f64], den: &[f64], den_sqrt: &[f64], log_factor: f64) -> f64 {
    let large = num
        .iter()
        .chain(den)
        .chain(den_sqrt)
        .any(|y| y.abs() > LOG_SPACE_THRESHOLD);
    if large {
        let ln = num.iter().map(|&y| ln_sinhc(y)).sum::<f64>()
            - den.iter().map(|&y| ln_sinhc(y)).sum::<f64>()
            - 0.5 * den_sqrt.iter().map(|&y| ln_sinhc(y)).sum::<f64>()
            + log_factor;
        ln.exp()
    } else {
        let mut value = num.iter().map(|&y| sinhc(y)).product::<f64>();
        value /= den.iter().map(|&y| sinhc(y)).product::<f64>();
        value /= den_sqrt.iter().map(|&y| sinhc(y)).product::<f64>().sqrt();
        if log_factor != 0.0 {
            value *= log_factor.exp();
        }
        value
    }
}
