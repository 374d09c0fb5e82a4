//! Finite-order kernels stored as `P(+1 | context)` over all `2^order` contexts.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::symbol::{Context, Spin};
use crate::error::{param, Error, Result};
use crate::rational::{serde_rat_vec, to_f64, Rational};

/// Largest table order accepted by the constructor.
pub const MAX_TABLE_ORDER: usize = 24;

/// Entry `i` is `P(+1 | Context::from_index(i, order))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct TableKernel {
    order: usize,
    plus: Vec<Rational>,
    plus_f64: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    order: usize,
    #[serde(with = "serde_rat_vec")]
    plus: Vec<Rational>,
}

impl TryFrom<RawTable> for TableKernel {
    type Error = Error;
    fn try_from(r: RawTable) -> Result<Self> {
        TableKernel::new(r.order, r.plus)
    }
}

impl From<TableKernel> for RawTable {
    fn from(t: TableKernel) -> RawTable {
        RawTable {
            order: t.order,
            plus: t.plus,
        }
    }
}

impl TableKernel {
    pub fn new(order: usize, plus: Vec<Rational>) -> Result<Self> {
        if order > MAX_TABLE_ORDER {
            return Err(param(format!("table order {order} exceeds {MAX_TABLE_ORDER}")));
        }
        if plus.len() != 1 << order {
            return Err(param(format!(
                "table of order {order} needs {} entries, got {}",
                1usize << order,
                plus.len()
            )));
        }
        if let Some(i) = plus.iter().position(|p| p.is_negative() || p > &Rational::one()) {
            return Err(param(format!("table entry {i} is not a probability")));
        }
        let plus_f64 = plus.iter().map(to_f64).collect();
        Ok(TableKernel {
            order,
            plus,
            plus_f64,
        })
    }

    pub fn constant(order: usize, p: Rational) -> Result<Self> {
        TableKernel::new(order, vec![p; 1 << order])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn plus(&self) -> &[Rational] {
        &self.plus
    }

    pub fn plus_f64(&self) -> &[f64] {
        &self.plus_f64
    }

    /// `P(a | ctx)`; only the first `order` symbols of `ctx` are read.
    pub fn eval(&self, a: Spin, ctx: &Context) -> Result<Rational> {
        if ctx.order() < self.order {
            return Err(Error::ContextTooShort {
                needed: self.order,
                got: ctx.order(),
            });
        }
        let idx = Context::new(ctx.symbols()[..self.order].to_vec()).index();
        let p = &self.plus[idx];
        Ok(match a {
            Spin::Plus => p.clone(),
            Spin::Minus => Rational::one() - p,
        })
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.plus
            .iter()
            .all(|p| p.is_positive() && p < &Rational::one())
    }

    /// First context with a zero entry, if any.
    pub fn zero_entry(&self) -> Option<usize> {
        self.plus
            .iter()
            .position(|p| p.is_zero() || p.is_one())
    }

    /// `P(+1 | .)` nondecreasing under every single-coordinate flip `-1 -> +1`.
    pub fn is_attractive(&self) -> bool {
        let n = self.plus.len();
        (0..n).all(|idx| {
            (0..self.order).all(|i| {
                let bit = 1usize << i;
                idx & bit != 0 || self.plus[idx] <= self.plus[idx | bit]
            })
        })
    }

    /// Pointwise `P_self(+1|x) >= P_other(+1|x)` after lifting both to the larger order.
    pub fn dominates(&self, other: &TableKernel) -> bool {
        let m = self.order.max(other.order);
        (0..1usize << m).all(|idx| {
            self.plus[idx & ((1 << self.order) - 1)] >= other.plus[idx & ((1 << other.order) - 1)]
        })
    }

    /// Same kernel viewed as one of a larger order.
    pub fn lift(&self, order: usize) -> Result<TableKernel> {
        if order < self.order {
            return Err(param("cannot lift to a smaller order"));
        }
        let mask = (1usize << self.order) - 1;
        TableKernel::new(order, (0..1usize << order).map(|i| self.plus[i & mask].clone()).collect())
    }

    fn truncate_by(&self, j: usize, pick: impl Fn(&Rational, &Rational) -> bool) -> Result<TableKernel> {
        if j >= self.order {
            return Err(param(format!(
                "truncation order {j} must be below the table order {}",
                self.order
            )));
        }
        let mask = (1usize << j) - 1;
        let mut out: Vec<Option<Rational>> = vec![None; 1 << j];
        for (idx, p) in self.plus.iter().enumerate() {
            let slot = &mut out[idx & mask];
            match slot {
                Some(cur) if !pick(p, cur) => {}
                _ => *slot = Some(p.clone()),
            }
        }
        TableKernel::new(j, out.into_iter().map(|p| p.unwrap()).collect())
    }

    /// `g_j(+1|x) = max` over all completions of the first `j` symbols.
    pub fn sup_truncation(&self, j: usize) -> Result<TableKernel> {
        self.truncate_by(j, |a, b| a > b)
    }

    /// `g'_j(+1|x) = min` over all completions of the first `j` symbols.
    pub fn inf_truncation(&self, j: usize) -> Result<TableKernel> {
        self.truncate_by(j, |a, b| a < b)
    }

    /// Symmetric partner `x -> 1 - P(+1 | -x)`.
    pub fn mirrored(&self) -> TableKernel {
        let n = self.plus.len();
        let plus = (0..n)
            .map(|idx| Rational::one() - &self.plus[(n - 1) ^ idx])
            .collect();
        TableKernel::new(self.order, plus).expect("mirror of a valid table")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn flip_violation_is_detected() {
        // index 1 is context (+1)
        let g = TableKernel::new(1, vec![rat(4, 5), rat(1, 5)]).unwrap();
        assert!(!g.is_attractive());
        let h = TableKernel::new(1, vec![rat(1, 5), rat(4, 5)]).unwrap();
        assert!(h.is_attractive());
        assert!(TableKernel::constant(0, rat(1, 3)).unwrap().is_attractive());
    }

    #[test]
    fn truncations_bracket_the_table() {
        let g = TableKernel::new(2, vec![rat(1, 10), rat(3, 10), rat(2, 10), rat(9, 10)]).unwrap();
        let s = g.sup_truncation(1).unwrap();
        let i = g.inf_truncation(1).unwrap();
        assert_eq!(s.plus(), &[rat(2, 10), rat(9, 10)]);
        assert_eq!(i.plus(), &[rat(1, 10), rat(3, 10)]);
        assert!(s.dominates(&g) && g.dominates(&i));
        assert!(g.sup_truncation(2).is_err());
        let c = TableKernel::constant(3, rat(1, 2)).unwrap();
        assert_eq!(c.sup_truncation(1).unwrap(), c.inf_truncation(1).unwrap());
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(TableKernel::new(2, vec![rat(1, 2); 3]).is_err());
        assert!(TableKernel::new(0, vec![rat(3, 2)]).is_err());
    }
}
