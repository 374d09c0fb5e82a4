//! Odd, increasing Markov orders `m_1 < m_2 < ...`, with `m_0 = 0`.
//!
//! Entries too large for exact integers are kept as an enclosure of their
//! base-2 logarithm; entries beyond even that are reported as `Beyond`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::logspace::{log2_enclosure, LogSpaceValue, RatInterval, DEFAULT_PRECISION, EXACT_BIT_CAP};
use crate::error::{param, Error, Result};
use crate::rational::{from_biguint, int, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "formula", content = "params", rename_all = "snake_case")]
pub enum OrderFormula {
    /// `m_j = first + (j-1) step`, `step` even.
    Arithmetic { first: u64, step: u64 },
    /// `m_1 = first`, `m_{j+1} = base^{m_j}`.
    Tower { first: u64, base: u64 },
    /// `m_j = 2^{c j^2} - 1`.
    SquareExponent { c: u32 },
}

/// Either an explicit list `[m_1, ..., m_K]` or a formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OrderSequence {
    Explicit(Vec<u64>),
    Formula(OrderFormula),
}

/// A realized order.
#[derive(Debug, Clone, PartialEq)]
pub enum Order {
    Exact(BigUint),
    /// `log2(m)` lies in the interval.
    Log2(RatInterval),
    /// Too large for either representation.
    Beyond,
}

impl Order {
    pub fn as_logspace(&self) -> Option<LogSpaceValue> {
        match self {
            Order::Exact(n) => Some(LogSpaceValue::Exact(from_biguint(n))),
            Order::Log2(iv) => Some(LogSpaceValue::Log2(iv.clone())),
            Order::Beyond => None,
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            Order::Exact(n) => n.to_u64(),
            _ => None,
        }
    }

    pub fn summary(&self) -> String {
        match self {
            Order::Exact(n) if n.bits() <= 64 => n.to_string(),
            Order::Exact(n) => format!("~2^{:.4} ({} bits)", crate::bounds::logspace::approx_log2(&from_biguint(n)), n.bits()),
            Order::Log2(iv) => LogSpaceValue::Log2(iv.clone()).summary(),
            Order::Beyond => "beyond representable range".into(),
        }
    }
}

impl OrderSequence {
    pub fn explicit(values: Vec<u64>) -> Self {
        OrderSequence::Explicit(values)
    }

    /// `1, 3, 5, ...`
    pub fn odd_integers() -> Self {
        OrderSequence::Formula(OrderFormula::Arithmetic { first: 1, step: 2 })
    }

    pub fn tower(first: u64, base: u64) -> Self {
        OrderSequence::Formula(OrderFormula::Tower { first, base })
    }

    pub fn square_exponent(c: u32) -> Self {
        OrderSequence::Formula(OrderFormula::SquareExponent { c })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OrderSequence::Explicit(v) => {
                let mut prev = 0u64;
                for (i, &m) in v.iter().enumerate() {
                    if m % 2 == 0 {
                        return Err(param(format!("order m_{} = {m} is not odd", i + 1)));
                    }
                    if m <= prev {
                        return Err(param(format!("orders must increase strictly (m_{} = {m})", i + 1)));
                    }
                    prev = m;
                }
            }
            OrderSequence::Formula(OrderFormula::Arithmetic { first, step }) => {
                if first % 2 == 0 || step % 2 == 1 || *step == 0 {
                    return Err(param("arithmetic orders need an odd first term and an even positive step"));
                }
            }
            OrderSequence::Formula(OrderFormula::Tower { first, base }) => {
                if first % 2 == 0 || base % 2 == 0 || *base < 3 {
                    return Err(param("tower orders need an odd first term and an odd base >= 3"));
                }
            }
            OrderSequence::Formula(OrderFormula::SquareExponent { c }) => {
                if *c == 0 {
                    return Err(param("square-exponent orders need c >= 1"));
                }
            }
        }
        Ok(())
    }

    /// Number of listed orders for explicit sequences.
    pub fn len(&self) -> Option<u64> {
        match self {
            OrderSequence::Explicit(v) => Some(v.len() as u64),
            _ => None,
        }
    }

    /// `m_j`, with `m_0 = 0`.
    pub fn get(&self, j: u64) -> Result<Order> {
        if j == 0 {
            return Ok(Order::Exact(BigUint::zero()));
        }
        match self {
            OrderSequence::Explicit(v) => v
                .get((j - 1) as usize)
                .map(|&m| Order::Exact(BigUint::from(m)))
                .ok_or_else(|| Error::NotRepresentable {
                    index: j,
                    reason: format!("only {} orders are listed", v.len()),
                }),
            OrderSequence::Formula(OrderFormula::Arithmetic { first, step }) => {
                let m = BigUint::from(*first) + BigUint::from(*step) * BigUint::from(j - 1);
                Ok(Order::Exact(m))
            }
            OrderSequence::Formula(OrderFormula::Tower { first, base }) => Ok(tower(*first, *base, j)),
            OrderSequence::Formula(OrderFormula::SquareExponent { c }) => {
                let e = (*c as u128) * (j as u128) * (j as u128);
                if e <= EXACT_BIT_CAP as u128 {
                    Ok(Order::Exact((BigUint::one() << (e as usize)) - BigUint::one()))
                } else {
                    // e - 1 <= log2(2^e - 1) < e
                    let e = Rational::from_integer(e.into());
                    Ok(Order::Log2(RatInterval::new(&e - int(1), e)))
                }
            }
        }
    }

    /// `m_j` as a machine integer, for simulation and exact analysis.
    pub fn get_usize(&self, j: u64) -> Result<usize> {
        match self.get(j)? {
            Order::Exact(n) => n.to_usize().ok_or_else(|| Error::NotRepresentable {
                index: j,
                reason: format!("order m_{j} has {} bits", n.bits()),
            }),
            _ => Err(Error::NotRepresentable {
                index: j,
                reason: format!("order m_{j} exceeds exact range"),
            }),
        }
    }
}

fn tower(first: u64, base: u64, j: u64) -> Order {
    let mut m = BigUint::from(first);
    let log2_base = log2_enclosure(&int(base as i64), DEFAULT_PRECISION);
    for level in 2..=j {
        let bits_est = (base as f64).log2() * m.to_f64().unwrap_or(f64::INFINITY);
        if bits_est >= EXACT_BIT_CAP as f64 {
            if level == j {
                return Order::Log2(log2_base.scale(&from_biguint(&m)));
            }
            return Order::Beyond;
        }
        let e = m.to_u32().expect("exponent fits");
        m = BigUint::from(base).pow(e);
    }
    debug_assert!(m.is_odd());
    Order::Exact(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corollary1_tower_representations() {
        let s = OrderSequence::tower(217, 577);
        s.validate().unwrap();
        assert_eq!(s.get(0).unwrap(), Order::Exact(BigUint::zero()));
        assert_eq!(s.get_usize(1).unwrap(), 217);
        match s.get(2).unwrap() {
            Order::Exact(n) => assert!((1985..=1995).contains(&n.bits()), "{}", n.bits()),
            o => panic!("{o:?}"),
        }
        assert!(matches!(s.get(3).unwrap(), Order::Log2(_)));
        assert_eq!(s.get(4).unwrap(), Order::Beyond);
    }

    #[test]
    fn square_exponent_orders_are_odd() {
        let s = OrderSequence::square_exponent(7);
        assert_eq!(s.get_usize(1).unwrap(), 127);
        assert_eq!(s.get(2).unwrap(), Order::Exact(BigUint::from((1u64 << 28) - 1)));
        assert!(matches!(s.get(400).unwrap(), Order::Log2(_)));
    }

    #[test]
    fn explicit_validation() {
        assert!(OrderSequence::explicit(vec![1, 3, 5]).validate().is_ok());
        assert!(OrderSequence::explicit(vec![1, 4]).validate().is_err());
        assert!(OrderSequence::explicit(vec![3, 1]).validate().is_err());
        assert!(OrderSequence::explicit(vec![1]).get(2).is_err());
    }

    #[test]
    fn serde_shapes() {
        let s: OrderSequence = serde_json::from_str("[1,3,5]").unwrap();
        assert_eq!(s, OrderSequence::explicit(vec![1, 3, 5]));
        let t: OrderSequence =
            serde_json::from_str(r#"{"formula":"tower","params":{"first":217,"base":577}}"#).unwrap();
        assert_eq!(t, OrderSequence::tower(217, 577));
    }
}
