//! Scalar types for tree and cylinder measures.
//!
//! Every measure in the library is a dyadic rational `count / 2^level` or a
//! product/sum of such values. Bookkeeping that must hold exactly uses
//! [`Exact`]; quick estimates may use `f64`.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, One, ToPrimitive, Zero};
use std::fmt::Debug;

/// A scalar that can hold tree-level measures.
pub trait Measure: Num + Clone + PartialOrd + Debug {
    /// `count / 2^level`.
    fn dyadic(count: u64, level: u32) -> Self;

    /// `num / den`; `den` must be nonzero.
    fn ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;
}

impl Measure for f64 {
    fn dyadic(count: u64, level: u32) -> Self {
        count as f64 / 2f64.powi(level as i32)
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Measure for f32 {
    fn dyadic(count: u64, level: u32) -> Self {
        count as f32 / 2f32.powi(level as i32)
    }

    fn ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Measure for BigRational {
    fn dyadic(count: u64, level: u32) -> Self {
        Ratio::new(BigInt::from(count), BigInt::one() << level as usize)
    }

    fn ratio(num: i64, den: i64) -> Self {
        Ratio::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Measure for Ratio<i64> {
    fn dyadic(count: u64, level: u32) -> Self {
        assert!(level < 63, "level {level} overflows a 64-bit denominator");
        Ratio::new(count as i64, 1i64 << level)
    }

    fn ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational measure. Used for every bookkeeping identity.
pub type Exact = BigRational;

/// Floating estimate, for reporting only.
pub type Approx = f64;

/// Shorthand for an exact `num / den`.
pub fn q(num: i64, den: i64) -> Exact {
    Exact::ratio(num, den)
}

/// `2^-a` as an exact value.
pub fn pow2_neg(a: u32) -> Exact {
    Exact::dyadic(1, a)
}

/// Least `a >= 1` with `2^-a < gap`; `None` if `gap <= 0`.
pub fn least_dyadic_below(gap: &Exact) -> Option<u32> {
    if *gap <= Exact::zero() {
        return None;
    }
    (1..4096).find(|&a| pow2_neg(a) < *gap)
}

/// `ceil(1/q)` for `0 < q`.
pub fn ceil_recip(qv: &Exact) -> u64 {
    let r = qv.recip().ceil();
    r.to_integer().to_u64().unwrap_or(u64::MAX)
}

/// Render an exact value as `n/d` (or `n` when integral).
pub fn show(x: &Exact) -> String {
    if x.is_integer() {
        x.to_integer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `n/d`, `n`, or a finite decimal like `0.1` into an exact value.
pub fn parse_exact(s: &str) -> Option<Exact> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let digits = format!("{whole}{frac}");
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Some(Ratio::new(n, d));
    }
    let n: BigInt = s.parse().ok()?;
    Some(Ratio::from_integer(n))
}
