//! Exact dyadic rationals `k / 2^N` in `[0, 1]` and their binary digits.
//!
//! All grid bookkeeping goes through integer pairs. Floating point only
//! appears when a point is handed to a basis function, and the conversion
//! is exact for every level supported here.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

/// Finest level a [`DyadicRational`] may carry. Every such point converts
/// to `f64` without rounding.
pub const MAX_DYADIC_LEVEL: u32 = 53;

/// The point `numer * 2^-level` of `[0, 1]`, kept in canonical form: either
/// `numer` is odd, or the point is `0/2^0` or `1/2^0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    numer: u64,
    level: u32,
}

impl DyadicRational {
    pub const ZERO: Self = Self { numer: 0, level: 0 };
    pub const ONE: Self = Self { numer: 1, level: 0 };

    /// Builds `numer / 2^level`, reducing to canonical form.
    pub fn new(numer: u64, level: u32) -> Result<Self> {
        if level > MAX_DYADIC_LEVEL {
            return domain(format!("dyadic level {level} exceeds {MAX_DYADIC_LEVEL}"));
        }
        if numer > 1u64 << level {
            return domain(format!("{numer}/2^{level} lies outside [0, 1]"));
        }
        if numer == 0 {
            return Ok(Self::ZERO);
        }
        let shift = numer.trailing_zeros().min(level);
        Ok(Self {
            numer: numer >> shift,
            level: level - shift,
        })
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    /// Canonical level, i.e. the coarsest grid `D_N` containing the point.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Numerator of the same point written on the grid `D_level`, if the
    /// point belongs to it.
    pub fn numer_at(&self, level: u32) -> Option<u64> {
        if level < self.level || level > MAX_DYADIC_LEVEL {
            None
        } else {
            Some(self.numer << (level - self.level))
        }
    }

    pub fn to_f64(&self) -> f64 {
        // numer <= 2^53, so both factors are exact.
        self.numer as f64 * (-(self.level as f64)).exp2()
    }

    /// The exact dyadic value of a float in `[0, 1]`, when its level does
    /// not exceed [`MAX_DYADIC_LEVEL`].
    pub fn from_f64(t: f64) -> Option<Self> {
        if !(0.0..=1.0).contains(&t) {
            return None;
        }
        let scaled = t * (MAX_DYADIC_LEVEL as f64).exp2();
        if scaled.fract() != 0.0 {
            return None;
        }
        Self::new(scaled as u64, MAX_DYADIC_LEVEL).ok()
    }

    /// Midpoint of `[self, other]`.
    pub fn midpoint(&self, other: &Self) -> Result<Self> {
        let level = self.level.max(other.level) + 1;
        if level > MAX_DYADIC_LEVEL {
            return domain("midpoint exceeds the finest dyadic level");
        }
        let a = self.numer_at(level).unwrap_or_default();
        let b = other.numer_at(level).unwrap_or_default();
        Self::new((a + b) / 2, level)
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let level = self.level.max(other.level);
        // Both lifts exist because `level` is at least each operand's level.
        let a = self.numer_at(level).unwrap_or_default();
        let b = other.numer_at(level).unwrap_or_default();
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numer, self.level)
    }
}

impl FromStr for DyadicRational {
    type Err = Error;

    /// Parses `k/2^N`; bare integers `0` and `1` are accepted too.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Domain(format!("expected a dyadic literal k/2^N, got {s:?}"));
        match s.split_once('/') {
            None => {
                let numer: u64 = s.parse().map_err(|_| bad())?;
                Self::new(numer, 0)
            }
            Some((numer, denom)) => {
                let numer: u64 = numer.trim().parse().map_err(|_| bad())?;
                let level: u32 = denom
                    .trim()
                    .strip_prefix("2^")
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?;
                Self::new(numer, level)
            }
        }
    }
}

/// Leading binary digits `a_1, a_2, ...` of a point of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDigits {
    digits: Vec<u8>,
    exhausted: bool,
}

impl BinaryDigits {
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// True when the stored digits are the complete finite expansion.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Digit `a_i` (1-based). Past the stored prefix of an exhausted
    /// expansion the digit is 0; otherwise it is unknown.
    pub fn digit(&self, i: usize) -> Option<u8> {
        assert!(i >= 1, "binary digits are numbered from 1");
        match self.digits.get(i - 1) {
            Some(&d) => Some(d),
            None if self.exhausted => Some(0),
            None => None,
        }
    }

    /// `sum a_i 2^-i` over the stored digits.
    pub fn value(&self) -> f64 {
        self.digits
            .iter()
            .enumerate()
            .map(|(i, &d)| d as f64 * (-(i as f64 + 1.0)).exp2())
            .sum()
    }
}

/// First `depth` digits of a dyadic point, using the finite expansion.
///
/// The point 1 has no finite expansion in `[0, 1)`; it is reported as
/// `depth` ones and never exhausted.
pub fn binary_digits(t: DyadicRational, depth: usize) -> BinaryDigits {
    if t == DyadicRational::ONE {
        return BinaryDigits {
            digits: vec![1; depth],
            exhausted: false,
        };
    }
    let level = t.level() as usize;
    let take = depth.min(level);
    let digits = (1..=take)
        .map(|i| ((t.numer() >> (level - i)) & 1) as u8)
        .collect();
    BinaryDigits {
        digits,
        exhausted: level <= depth,
    }
}

/// First `depth` digits of a real in `[0, 1]`. Floats are dyadic, so the
/// expansion is exhausted whenever the float's level is at most `depth`.
pub fn binary_digits_f64(t: f64, depth: usize) -> Result<BinaryDigits> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("t = {t} lies outside [0, 1]"));
    }
    if let Some(d) = DyadicRational::from_f64(t) {
        return Ok(binary_digits(d, depth));
    }
    let mut digits = Vec::with_capacity(depth);
    let mut rest = t;
    for _ in 0..depth {
        rest *= 2.0;
        let d = rest >= 1.0;
        if d {
            rest -= 1.0;
        }
        digits.push(d as u8);
    }
    Ok(BinaryDigits {
        digits,
        exhausted: false,
    })
}

/// Smallest `N` such that every basis element of level `n > N` vanishes at
/// `t`; this is the canonical level of `t`.
pub fn terminal_level(t: DyadicRational) -> u32 {
    t.level()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(k: u64, n: u32) -> DyadicRational {
        DyadicRational::new(k, n).unwrap()
    }

    #[test]
    fn canonical_reduction() {
        assert_eq!(d(4, 3), d(1, 1));
        assert_eq!(d(8, 3), DyadicRational::ONE);
        assert_eq!(d(0, 7), DyadicRational::ZERO);
        assert_eq!(d(6, 4).numer(), 3);
        assert_eq!(d(6, 4).level(), 3);
        assert!(DyadicRational::new(9, 3).is_err());
        assert!(DyadicRational::new(1, 54).is_err());
    }

    #[test]
    fn ordering_is_exact() {
        assert!(d(3, 3) < d(1, 1));
        assert!(d(1, 1) < d(5, 3));
        assert_eq!(d(2, 2).cmp(&d(1, 1)), Ordering::Equal);
        let tiny = d(1, 53);
        assert!(DyadicRational::ZERO < tiny);
        assert!(d((1 << 53) - 1, 53) < DyadicRational::ONE);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/2^3".parse::<DyadicRational>().unwrap(), d(3, 3));
        assert_eq!(" 2/2^2 ".parse::<DyadicRational>().unwrap(), d(1, 1));
        assert_eq!("1".parse::<DyadicRational>().unwrap(), DyadicRational::ONE);
        assert!("3/8".parse::<DyadicRational>().is_err());
        assert!("5/2^2".parse::<DyadicRational>().is_err());
        assert_eq!(d(6, 4).to_string(), "3/2^3");
    }

    #[test]
    fn digits_examples() {
        let b = binary_digits(d(3, 3), 8);
        assert_eq!(b.digits(), &[0, 1, 1]);
        assert!(b.is_exhausted());

        let b = binary_digits(DyadicRational::ZERO, 5);
        assert!(b.digits().is_empty());
        assert!(b.is_exhausted());
        assert!((1..=5).all(|i| b.digit(i) == Some(0)));

        let b = binary_digits(d(1, 1), 4);
        assert_eq!(b.digits(), &[1]);
        assert!(b.is_exhausted());

        let b = binary_digits(d(3, 3), 2);
        assert_eq!(b.digits(), &[0, 1]);
        assert!(!b.is_exhausted());
        assert_eq!(b.digit(3), None);
    }

    #[test]
    fn digits_of_one_and_reals() {
        let b = binary_digits(DyadicRational::ONE, 3);
        assert_eq!(b.digits(), &[1, 1, 1]);
        assert!(!b.is_exhausted());

        let b = binary_digits_f64(1.0 / 3.0, 6).unwrap();
        assert_eq!(b.digits(), &[0, 1, 0, 1, 0, 1]);
        assert!(!b.is_exhausted());
        assert!(binary_digits_f64(0.375, 10).unwrap().is_exhausted());
        assert!(binary_digits_f64(1.5, 3).is_err());
    }

    #[test]
    fn terminal_levels() {
        assert_eq!(terminal_level(d(1, 1)), 1);
        assert_eq!(terminal_level(DyadicRational::ZERO), 0);
        assert_eq!(terminal_level(d(3, 3)), 3);
        assert_eq!(terminal_level(d(12, 5)), 3);
    }

    #[test]
    fn midpoints() {
        assert_eq!(
            DyadicRational::ZERO.midpoint(&DyadicRational::ONE).unwrap(),
            d(1, 1)
        );
        assert_eq!(d(1, 2).midpoint(&d(1, 1)).unwrap(), d(3, 3));
    }

    proptest! {
        #[test]
        fn f64_round_trip(level in 0u32..=53, raw in any::<u64>()) {
            let numer = raw % ((1u64 << level) + 1);
            let x = d(numer, level);
            prop_assert_eq!(DyadicRational::from_f64(x.to_f64()), Some(x));
            let back: DyadicRational = x.to_string().parse().unwrap();
            prop_assert_eq!(back, x);
        }

        #[test]
        fn digits_reconstruct(level in 0u32..=53, raw in any::<u64>()) {
            let numer = raw % (1u64 << level);
            let x = d(numer, level);
            let b = binary_digits(x, 60);
            prop_assert!(b.is_exhausted());
            prop_assert_eq!(b.value(), x.to_f64());
            prop_assert_eq!(b.digits().len() as u32, x.level());
        }
    }
}
