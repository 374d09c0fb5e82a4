//! Outward-rounded rational intervals, certified logarithms and a
//! comparison type that never guesses.
//!
//! Quantities in the criterium checks range from tiny rationals to numbers
//! like `577^(577^217)`. Three representations cover that range:
//!
//! * `Exact`: a rational, used while bit lengths stay below [`EXACT_BIT_CAP`];
//! * `Enclosure`: a rational interval certainly containing the value
//!   (the result of a logarithm, for example);
//! * `Log2`: a rational interval certainly containing `log2(|value|)`.
//!
//! Logarithms are evaluated with the `atanh` series in fixed-point big-integer
//! arithmetic. Every truncation is accounted for, and the result is widened by
//! the accumulated error bound, so every enclosure is rigorous.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::rational::{format_rational, Rational};

/// Exact integers/rationals beyond this many bits switch to `Log2`.
pub const EXACT_BIT_CAP: u64 = 1 << 20;

/// Working precision (fractional bits) of the logarithm kernels.
pub const DEFAULT_PRECISION: u32 = 192;

/// A closed interval `[lo, hi]` of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatInterval {
    pub lo: Rational,
    pub hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        debug_assert!(lo <= hi);
        RatInterval { lo, hi }
    }

    pub fn point(v: Rational) -> Self {
        RatInterval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn add(&self, o: &RatInterval) -> RatInterval {
        RatInterval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn sub(&self, o: &RatInterval) -> RatInterval {
        RatInterval::new(&self.lo - &o.hi, &self.hi - &o.lo)
    }

    pub fn add_scalar(&self, v: &Rational) -> RatInterval {
        RatInterval::new(&self.lo + v, &self.hi + v)
    }

    pub fn scale(&self, v: &Rational) -> RatInterval {
        let a = &self.lo * v;
        let b = &self.hi * v;
        if a <= b {
            RatInterval::new(a, b)
        } else {
            RatInterval::new(b, a)
        }
    }

    pub fn mul(&self, o: &RatInterval) -> RatInterval {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        RatInterval::new(lo, hi)
    }

    /// Division by an interval that lies strictly above zero.
    pub fn div_positive(&self, o: &RatInterval) -> RatInterval {
        assert!(o.lo.is_positive(), "divisor interval must be positive");
        let c = [
            &self.lo / &o.lo,
            &self.lo / &o.hi,
            &self.hi / &o.lo,
            &self.hi / &o.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        RatInterval::new(lo, hi)
    }

    /// Round endpoints outward to multiples of `2^-bits`.
    pub fn round_out(&self, bits: u32) -> RatInterval {
        let scale = Rational::from_integer(BigInt::one() << bits);
        let lo = (&self.lo * &scale).floor() / &scale;
        let hi = (&self.hi * &scale).ceil() / &scale;
        RatInterval::new(lo, hi)
    }

    pub fn midpoint_f64(&self) -> f64 {
        (approx_f64(&self.lo) + approx_f64(&self.hi)) / 2.0
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }
}

fn bit_len(n: &BigInt) -> u64 {
    n.bits()
}

/// `log2(|r|)` to roughly double precision; for display and heuristics only.
pub fn approx_log2(r: &Rational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    fn lead(n: &BigInt) -> (f64, i64) {
        let b = n.bits() as i64;
        let shift = (b - 60).max(0);
        let top = (n.abs() >> shift as usize).to_f64().unwrap();
        (top, shift)
    }
    let (tn, sn) = lead(r.numer());
    let (td, sd) = lead(r.denom());
    tn.log2() - td.log2() + (sn - sd) as f64
}

/// Double approximation that saturates instead of failing.
pub fn approx_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Fixed-point `atanh(z)` for `|z| <= 1/3`: returns `(value, err)` where the
/// true value lies in `[value - err, value + err] / 2^w`.
fn atanh_fixed(z: &Rational, w: u32) -> (BigInt, BigInt) {
    let neg = z.is_negative();
    let za = z.abs();
    debug_assert!(za <= Rational::new(BigInt::one(), BigInt::from(3)));
    // |za - zf / 2^w| <= 2^-w
    let zf = (za.numer() << w).div_floor(za.denom());
    let z2 = (&zf * &zf) >> w;
    // (1/3)^(2n+1) <= 2^-(w+2) once 2n+1 >= (w+2)/log2(9)
    let n_terms = ((w as f64 + 2.0) / 9f64.log2()).ceil() as u64 / 2 + 2;
    let mut term = zf.clone();
    let mut sum = BigInt::zero();
    for n in 0..n_terms {
        sum += &term / BigInt::from(2 * n + 1);
        term = (&term * &z2) >> w;
        if term.is_zero() {
            break;
        }
    }
    // floor errors: <= 2 ulps per term; tail <= 2 ulps; input rounding <= 2 ulps.
    let err = BigInt::from(4 * n_terms + 8);
    if neg {
        (-sum, err)
    } else {
        (sum, err)
    }
}

fn fixed_to_interval(v: &BigInt, err: &BigInt, w: u32) -> RatInterval {
    let den = BigInt::one() << w;
    RatInterval::new(
        Rational::new(v - err, den.clone()),
        Rational::new(v + err, den),
    )
}

/// Certified enclosure of `ln 2`.
pub fn ln2_enclosure(w: u32) -> RatInterval {
    let third = Rational::new(BigInt::one(), BigInt::from(3));
    let (v, e) = atanh_fixed(&third, w);
    fixed_to_interval(&(v * 2), &(e * 2), w)
}

/// Certified enclosure of `ln x` for rational `x > 0`.
pub fn ln_enclosure(x: &Rational, w: u32) -> RatInterval {
    assert!(x.is_positive(), "ln of a non-positive rational");
    if x.is_one() {
        return RatInterval::point(Rational::zero());
    }
    let e = bit_len(x.numer()) as i64 - bit_len(x.denom()) as i64;
    // y = x / 2^e lies in (1/2, 2)
    let y = if e >= 0 {
        x / Rational::from_integer(BigInt::one() << e as usize)
    } else {
        x * Rational::from_integer(BigInt::one() << (-e) as usize)
    };
    let z = (&y - Rational::one()) / (&y + Rational::one());
    let (v, err) = atanh_fixed(&z, w);
    let ln_y = fixed_to_interval(&(v * 2), &(err * 2), w);
    let ln2 = ln2_enclosure(w);
    ln2.scale(&Rational::from_integer(BigInt::from(e)))
        .add(&ln_y)
        .round_out(w)
}

/// Certified enclosure of `log2 x` for rational `x > 0`.
pub fn log2_enclosure(x: &Rational, w: u32) -> RatInterval {
    assert!(x.is_positive(), "log2 of a non-positive rational");
    // Exact for powers of two.
    if x.numer().is_one() || x.denom().is_one() {
        let n = if x.denom().is_one() { x.numer() } else { x.denom() };
        if n.magnitude().count_ones() == 1 {
            let k = BigInt::from(n.bits() - 1);
            let k = if x.denom().is_one() { k } else { -k };
            return RatInterval::point(Rational::from_integer(k));
        }
    }
    ln_enclosure(x, w)
        .div_positive(&ln2_enclosure(w))
        .round_out(w)
}

/// `log2` applied to an interval of positive rationals (monotone).
pub fn log2_of_interval(iv: &RatInterval, w: u32) -> RatInterval {
    let lo = log2_enclosure(&iv.lo, w);
    let hi = log2_enclosure(&iv.hi, w);
    RatInterval::new(lo.lo, hi.hi)
}

/// `ln` applied to an interval of positive rationals (monotone).
pub fn ln_of_interval(iv: &RatInterval, w: u32) -> RatInterval {
    let lo = ln_enclosure(&iv.lo, w);
    let hi = ln_enclosure(&iv.hi, w);
    RatInterval::new(lo.lo, hi.hi)
}

/// Upper bound on `log2(1 + 2^-a)` for `a >= 0`: uses `log2(1+t) <= t / ln 2 < 1.5 t`.
pub fn log2_one_plus_small(a_lo: &Rational, w: u32) -> Rational {
    let a = a_lo.floor().to_integer();
    if a.is_negative() {
        // t > 1: log2(1 + t) <= log2(2t) = 1 + log2 t = 1 - a
        return Rational::from_integer(BigInt::one() - a);
    }
    if a > BigInt::from(w) {
        return Rational::new(BigInt::one(), BigInt::one() << w);
    }
    let a = a.to_u64().unwrap();
    Rational::new(BigInt::from(3), BigInt::from(2) << a as usize)
}

/// Result of a three-valued comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Yes,
    No,
    Indeterminate,
}

impl Outcome {
    pub fn and(self, o: Outcome) -> Outcome {
        match (self, o) {
            (Outcome::No, _) | (_, Outcome::No) => Outcome::No,
            (Outcome::Yes, Outcome::Yes) => Outcome::Yes,
            _ => Outcome::Indeterminate,
        }
    }

    pub fn from_bool(b: bool) -> Outcome {
        if b {
            Outcome::Yes
        } else {
            Outcome::No
        }
    }
}

/// Value in one of the three representations described in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub enum LogSpaceValue {
    Exact(Rational),
    Enclosure(RatInterval),
    /// A positive value whose base-2 logarithm lies in the interval.
    Log2(RatInterval),
}

impl LogSpaceValue {
    pub fn representation(&self) -> &'static str {
        match self {
            LogSpaceValue::Exact(_) => "exact",
            LogSpaceValue::Enclosure(_) => "enclosure",
            LogSpaceValue::Log2(_) => "log2",
        }
    }

    /// Sign, when certain: `Some(Less)` for negative, `Some(Equal)` for zero.
    pub fn sign(&self) -> Option<Ordering> {
        match self {
            LogSpaceValue::Exact(v) => Some(v.cmp(&Rational::zero())),
            LogSpaceValue::Enclosure(iv) => {
                if iv.lo.is_positive() {
                    Some(Ordering::Greater)
                } else if iv.hi.is_negative() {
                    Some(Ordering::Less)
                } else if iv.lo.is_zero() && iv.hi.is_zero() {
                    Some(Ordering::Equal)
                } else {
                    None
                }
            }
            LogSpaceValue::Log2(_) => Some(Ordering::Greater),
        }
    }

    /// Enclosure of the value itself, when the endpoints are representable.
    pub fn as_enclosure(&self) -> Option<RatInterval> {
        match self {
            LogSpaceValue::Exact(v) => Some(RatInterval::point(v.clone())),
            LogSpaceValue::Enclosure(iv) => Some(iv.clone()),
            LogSpaceValue::Log2(_) => None,
        }
    }

    /// Enclosure of `log2(value)` for a certainly-positive value.
    pub fn log2_enclosure(&self, w: u32) -> Option<RatInterval> {
        match self {
            LogSpaceValue::Exact(v) if v.is_positive() => Some(log2_enclosure(v, w)),
            LogSpaceValue::Enclosure(iv) if iv.is_positive() => Some(log2_of_interval(iv, w)),
            LogSpaceValue::Log2(iv) => Some(iv.clone()),
            _ => None,
        }
    }

    /// Certified `self <= other` test.
    pub fn le(&self, other: &LogSpaceValue, w: u32) -> Outcome {
        match self.compare(other, w) {
            Some(Ordering::Less) | Some(Ordering::Equal) => Outcome::Yes,
            Some(Ordering::Greater) => Outcome::No,
            None => {
                // Overlapping enclosures may still certify `<=` if the upper
                // end of self is below the lower end of other.
                if let (Some(a), Some(b)) = (self.as_enclosure(), other.as_enclosure()) {
                    if a.hi <= b.lo {
                        return Outcome::Yes;
                    }
                    if a.lo > b.hi {
                        return Outcome::No;
                    }
                }
                Outcome::Indeterminate
            }
        }
    }

    pub fn lt(&self, other: &LogSpaceValue, w: u32) -> Outcome {
        match self.compare(other, w) {
            Some(Ordering::Less) => Outcome::Yes,
            Some(Ordering::Greater) | Some(Ordering::Equal) => Outcome::No,
            None => Outcome::Indeterminate,
        }
    }

    /// Sound comparison: `None` when the representations cannot separate
    /// the two values.
    pub fn compare(&self, other: &LogSpaceValue, w: u32) -> Option<Ordering> {
        use LogSpaceValue::*;
        if let (Exact(a), Exact(b)) = (self, other) {
            return Some(a.cmp(b));
        }
        if let (Some(a), Some(b)) = (self.as_enclosure(), other.as_enclosure()) {
            return compare_intervals(&a, &b);
        }
        // At least one side is Log2 (hence positive).
        match (self.sign(), other.sign()) {
            (Some(Ordering::Less) | Some(Ordering::Equal), Some(Ordering::Greater))
                if matches!(other, Log2(_)) =>
            {
                return Some(Ordering::Less)
            }
            (Some(Ordering::Greater), Some(Ordering::Less) | Some(Ordering::Equal))
                if matches!(self, Log2(_)) =>
            {
                return Some(Ordering::Greater)
            }
            _ => {}
        }
        let a = self.log2_enclosure(w)?;
        let b = other.log2_enclosure(w)?;
        compare_intervals(&a, &b)
    }

    pub fn approx_log2(&self) -> f64 {
        match self {
            LogSpaceValue::Exact(v) => approx_log2(v),
            LogSpaceValue::Enclosure(iv) => approx_log2(&iv.hi),
            LogSpaceValue::Log2(iv) => iv.midpoint_f64(),
        }
    }

    /// Human-readable summary that stays short for astronomically large values.
    pub fn summary(&self) -> String {
        match self {
            LogSpaceValue::Exact(v) => {
                if v.numer().bits() + v.denom().bits() <= 128 {
                    format_rational(v)
                } else {
                    format!("~2^{:.6}", approx_log2(v))
                }
            }
            LogSpaceValue::Enclosure(iv) => {
                let l = approx_log2(&iv.hi);
                if l.abs() < 60.0 {
                    format!("[{:.12}, {:.12}]", approx_f64(&iv.lo), approx_f64(&iv.hi))
                } else {
                    format!("~2^{:.6}", l)
                }
            }
            LogSpaceValue::Log2(iv) => {
                let m = iv.midpoint_f64();
                if m.is_finite() {
                    format!("2^[{:.6}]", m)
                } else {
                    format!("2^(~2^{:.6})", approx_log2(&iv.hi))
                }
            }
        }
    }
}

impl fmt::Display for LogSpaceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.summary())
    }
}

fn compare_intervals(a: &RatInterval, b: &RatInterval) -> Option<Ordering> {
    if a.hi < b.lo {
        Some(Ordering::Less)
    } else if a.lo > b.hi {
        Some(Ordering::Greater)
    } else if a.lo == a.hi && b.lo == b.hi && a.lo == b.lo {
        Some(Ordering::Equal)
    } else {
        None
    }
}

/// Integer power with the `Log2` fallback once the exact result would exceed
/// the bit cap.
pub fn pow_logspace(base: &Rational, exp: &num_bigint::BigUint, w: u32) -> LogSpaceValue {
    let log2_base_est = approx_log2(base).abs();
    let est_bits = log2_base_est * exp.to_f64().unwrap_or(f64::INFINITY);
    if est_bits.is_finite() && est_bits < EXACT_BIT_CAP as f64 {
        let e = exp.to_u64().unwrap();
        return LogSpaceValue::Exact(num_traits::pow(base.clone(), e as usize));
    }
    let l = log2_enclosure(base, w);
    let e = Rational::from_integer(BigInt::from_biguint(Sign::Plus, exp.clone()));
    LogSpaceValue::Log2(l.scale(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn ln2_enclosure_contains_f64_ln2() {
        let iv = ln2_enclosure(DEFAULT_PRECISION);
        let w = approx_f64(&iv.width());
        assert!(w < 1e-50);
        assert!((iv.midpoint_f64() - std::f64::consts::LN_2).abs() < 1e-16);
    }

    #[test]
    fn ln_enclosure_matches_f64() {
        for (n, d) in [(3, 4), (1, 4), (32, 1), (1000, 7), (1, 1_000_000)] {
            let x = rat(n, d);
            let iv = ln_enclosure(&x, DEFAULT_PRECISION);
            let f = (n as f64 / d as f64).ln();
            assert!((iv.midpoint_f64() - f).abs() < 1e-13 * f.abs().max(1.0), "{n}/{d}");
            assert!(approx_f64(&iv.width()) < 1e-40);
        }
    }

    #[test]
    fn log2_of_powers_of_two_is_exact() {
        assert_eq!(
            log2_enclosure(&int(1024), 64),
            RatInterval::point(int(10))
        );
        assert_eq!(
            log2_enclosure(&rat(1, 8), 64),
            RatInterval::point(int(-3))
        );
    }

    #[test]
    fn comparisons_across_representations() {
        let w = DEFAULT_PRECISION;
        let small = LogSpaceValue::Exact(int(1000));
        let huge = LogSpaceValue::Log2(RatInterval::new(int(5000), int(5001)));
        assert_eq!(small.le(&huge, w), Outcome::Yes);
        assert_eq!(huge.le(&small, w), Outcome::No);
        let fuzzy = LogSpaceValue::Enclosure(RatInterval::new(int(999), int(1001)));
        assert_eq!(fuzzy.le(&small, w), Outcome::Indeterminate);
    }
}
