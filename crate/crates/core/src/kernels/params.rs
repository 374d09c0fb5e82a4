use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::orders::OrderSequence;
use super::weights::WeightFamily;
use crate::error::{param, Result};
use crate::rational::{int, rat, serde_rat, Rational};

/// Which past symbols a majority window of length `m` reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowConvention {
    /// The `m` most recent past symbols, lags `1..=m`.
    #[default]
    MostRecent,
    /// Lags `2..=m+1`: the most recent symbol is skipped.
    SkipMostRecent,
}

impl WindowConvention {
    pub fn offset(self) -> usize {
        match self {
            WindowConvention::MostRecent => 0,
            WindowConvention::SkipMostRecent => 1,
        }
    }
}

/// `epsilon`, the weights `lambda_j` and the orders `m_j` of a BK model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(with = "serde_rat")]
    pub epsilon: Rational,
    pub weights: WeightFamily,
    pub orders: OrderSequence,
    #[serde(default, skip_serializing_if = "is_default_convention")]
    pub convention: WindowConvention,
}

fn is_default_convention(c: &WindowConvention) -> bool {
    *c == WindowConvention::MostRecent
}

impl ModelParams {
    pub fn new(epsilon: Rational, weights: WeightFamily, orders: OrderSequence) -> Result<Self> {
        let p = ModelParams {
            epsilon,
            weights,
            orders,
            convention: WindowConvention::MostRecent,
        };
        p.validate()?;
        Ok(p)
    }

    /// `epsilon = 1/4`, `lambda_j = (1/2)(2/3)^j` and the given orders.
    pub fn geometric_quarter(orders: Vec<u64>) -> Self {
        ModelParams::new(rat(1, 4), WeightFamily::Corollary1, OrderSequence::explicit(orders))
            .expect("valid parameters")
    }

    pub fn with_convention(mut self, c: WindowConvention) -> Self {
        self.convention = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_positive() && self.epsilon < rat(1, 2)) {
            return Err(param(format!("epsilon must lie in (0, 1/2), got {}", self.epsilon)));
        }
        self.weights.validate()?;
        self.orders.validate()?;
        Ok(())
    }

    /// `1 - 2 epsilon`
    pub fn noise_free(&self) -> Rational {
        Rational::one() - int(2) * &self.epsilon
    }

    /// `lambda_bar_0 = 2 epsilon`, `lambda_bar_j = lambda_j (1 - 2 epsilon)`.
    pub fn lambda_bar(&self, j: u64) -> Result<Rational> {
        if j == 0 {
            Ok(int(2) * &self.epsilon)
        } else {
            Ok(self.weights.lambda(j)? * self.noise_free())
        }
    }

    /// `sum_{j >= k} lambda_bar_j` for `k >= 1`.
    pub fn lambda_bar_tail(&self, k: u64) -> Result<Rational> {
        Ok(self.weights.tail_sum(k.max(1))? * self.noise_free())
    }

    /// `sum_{j=a}^{b} lambda_bar_j` for `a >= 1`.
    pub fn lambda_bar_partial(&self, a: u64, b: u64) -> Result<Rational> {
        Ok(self.weights.partial_sum(a, b)? * self.noise_free())
    }

    /// Majority window of mixture component `j >= 1`, as `(offset, length)`.
    pub fn window(&self, j: u64) -> Result<(usize, usize)> {
        Ok((self.convention.offset(), self.orders.get_usize(j)?))
    }

    /// Context length needed by the first `k` components.
    pub fn context_order(&self, k: u64) -> Result<usize> {
        if k == 0 {
            return Ok(0);
        }
        Ok(self.orders.get_usize(k)? + self.convention.offset())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_bar_sums_to_one() {
        let p = ModelParams::geometric_quarter(vec![1, 3, 5]);
        let total = p.lambda_bar(0).unwrap() + p.lambda_bar_tail(1).unwrap();
        assert_eq!(total, Rational::one());
        assert_eq!(p.lambda_bar(1).unwrap(), rat(1, 6));
    }

    #[test]
    fn rejects_bad_epsilon() {
        let r = ModelParams::new(rat(1, 2), WeightFamily::Corollary1, OrderSequence::odd_integers());
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"epsilon\":\"1/4\""));
        let q: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
