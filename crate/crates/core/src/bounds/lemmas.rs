//! Closed-form bounds: regeneration means, magnetization and concentration.

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::logspace::{approx_f64, log2_enclosure, LogSpaceValue, RatInterval, DEFAULT_PRECISION};
use crate::error::{param, precondition, Error, Result};
use crate::kernels::{ModelParams, Order};
use crate::rational::{format_rational, from_biguint, int, Rational};

/// Largest exact `(2 epsilon)^-m` computed before switching to `Log2`.
const EXACT_POWER_BITS: f64 = 65_536.0;

fn check_epsilon(epsilon: &Rational) -> Result<()> {
    if !(epsilon.is_positive() && epsilon < &Rational::new(1.into(), 2.into())) {
        return Err(param(format!("epsilon must lie in (0, 1/2), got {}", format_rational(epsilon))));
    }
    Ok(())
}

/// `1 / (2 epsilon)`.
pub fn inverse_base(epsilon: &Rational) -> Rational {
    Rational::one() / (int(2) * epsilon)
}

/// `m (2 epsilon)^-m`, the regeneration-time mean bound; zero for `m = 0`.
pub fn eta_mean_bound(m: &Order, epsilon: &Rational) -> Result<LogSpaceValue> {
    check_epsilon(epsilon)?;
    let b = inverse_base(epsilon);
    match m {
        Order::Exact(n) if n.is_zero() => Ok(LogSpaceValue::Exact(Rational::zero())),
        Order::Exact(n) => Ok(scaled_power(n, &b)),
        Order::Log2(_) | Order::Beyond => Err(Error::NotRepresentable {
            index: 0,
            reason: "order too large for a regeneration bound".into(),
        }),
    }
}

/// `m b^m` for `b > 1`: exact while small, otherwise `log2 m + m log2 b`.
fn scaled_power(m: &BigUint, b: &Rational) -> LogSpaceValue {
    let w = DEFAULT_PRECISION;
    let lb = log2_enclosure(b, w);
    let est = approx_f64(&lb.hi) * m.to_f64().unwrap_or(f64::INFINITY);
    let mr = from_biguint(m);
    if est.is_finite() && est < EXACT_POWER_BITS {
        let e = m.to_usize().unwrap();
        return LogSpaceValue::Exact(&mr * num_traits::pow(b.clone(), e));
    }
    LogSpaceValue::Log2(log2_enclosure(&mr, w).add(&lb.scale(&mr)))
}

/// `1 + m b^m`, the factor appearing in the criterium constants.
pub fn one_plus_scaled_power(m: &Order, b: &Rational) -> Result<LogSpaceValue> {
    let w = DEFAULT_PRECISION;
    match m {
        Order::Exact(n) if n.is_zero() => Ok(LogSpaceValue::Exact(Rational::one())),
        Order::Exact(n) => Ok(match scaled_power(n, b) {
            LogSpaceValue::Exact(v) => LogSpaceValue::Exact(v + Rational::one()),
            LogSpaceValue::Log2(iv) => {
                // log2(1 + x) - log2 x = log2(1 + 1/x) < 2^(1 - log2 x)
                let slack = super::logspace::log2_one_plus_small(&iv.lo, w);
                LogSpaceValue::Log2(RatInterval::new(iv.lo.clone(), &iv.hi + slack))
            }
            other => other,
        }),
        _ => Err(Error::NotRepresentable {
            index: 0,
            reason: "order too large for exact or log-space evaluation".into(),
        }),
    }
}

/// `eta_mean_bound` for small machine orders, exactly.
pub fn eta_mean_bound_exact(m: u64, epsilon: &Rational) -> Result<Rational> {
    match eta_mean_bound(&Order::Exact(BigUint::from(m)), epsilon)? {
        LogSpaceValue::Exact(v) => Ok(v),
        _ => Err(Error::NotRepresentable {
            index: m,
            reason: "regeneration bound too large for exact evaluation".into(),
        }),
    }
}

/// `sum_{j >= k+2} lambda_j - sum_{j=r+1}^{k+1} lambda_j`.
pub fn weight_gap(params: &ModelParams, r: u64, k: u64) -> Result<Rational> {
    Ok(params.weights.tail_sum(k + 2)? - params.weights.partial_sum(r + 1, k + 1)?)
}

/// `(1 - 2 epsilon) * gap`, a lower bound on `E[Y_0]` under the mixed
/// kernel `q_{r,k+1}`; requires a positive gap.
pub fn magnetization_lower_bound(params: &ModelParams, r: u64, k: u64) -> Result<Rational> {
    if r >= k + 1 {
        return Err(param(format!("need r < k + 1, got r = {r}, k = {k}")));
    }
    let gap = weight_gap(params, r, k)?;
    if !gap.is_positive() {
        return Err(precondition(format!(
            "sum_{{j >= {}}} lambda_j > sum_{{j = {}}}^{{{}}} lambda_j fails (difference {})",
            k + 2,
            r + 1,
            k + 1,
            format_rational(&gap)
        )));
    }
    Ok(params.noise_free() * gap)
}

/// `2 exp(-m E^2 / (8 (1 + theta)^2))`.
pub fn concentration_rhs(m: f64, e: f64, theta_bar: f64) -> f64 {
    2.0 * (-(m * e * e) / (8.0 * (1.0 + theta_bar).powi(2))).exp()
}

/// The per-step d-bar bound `2 (E[eta] + 1) exp(-m E^2 / (8 (1 + theta)^2))`,
/// capped at 1; evaluated in logs so huge means do not overflow.
pub fn dbar_step_bound(eta_bar: f64, m_next: f64, e: f64, theta_bar: f64) -> f64 {
    let log = std::f64::consts::LN_2 + (eta_bar + 1.0).ln()
        - (m_next * e * e) / (8.0 * (1.0 + theta_bar).powi(2));
    log.exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn exact(m: u64) -> Order {
        Order::Exact(BigUint::from(m))
    }

    #[test]
    fn regeneration_bounds() {
        let e = rat(1, 4);
        assert_eq!(eta_mean_bound(&exact(3), &e).unwrap(), LogSpaceValue::Exact(int(24)));
        assert_eq!(eta_mean_bound(&exact(1), &e).unwrap(), LogSpaceValue::Exact(int(2)));
        assert_eq!(eta_mean_bound(&exact(0), &e).unwrap(), LogSpaceValue::Exact(int(0)));
        assert!(matches!(
            eta_mean_bound(&exact(1 << 20), &e).unwrap(),
            LogSpaceValue::Log2(_)
        ));
    }

    #[test]
    fn magnetization_example() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        assert_eq!(weight_gap(&p, 0, 0).unwrap(), rat(1, 3));
        assert_eq!(magnetization_lower_bound(&p, 0, 0).unwrap(), rat(1, 6));
        // r = 0, k = 1: tail(3) - lambda_1 - lambda_2 < 0
        assert!(magnetization_lower_bound(&p, 0, 1).is_err());
    }

    #[test]
    fn vacuous_concentration() {
        assert_eq!(concentration_rhs(100.0, 0.0, 3.0), 2.0);
        assert!(concentration_rhs(100.0, 0.5, 0.0) < 2.0);
    }
}
