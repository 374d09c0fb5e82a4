//! Kernel descriptors and their evaluation.

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::symbol::{Context, Spin};
use super::table::TableKernel;
use crate::error::{param, precondition, Error, Result};
use crate::rational::{to_f64, Rational};

/// Tagged kernel descriptor.
///
/// `Lower(k) = p_k` sends the mass of components `j > k` to `+1`, `Upper(k) = p'_k`
/// sends it to `-1`. `Mixed(k, l) = q_{k,l}` sends components `k < j <= l` to `-1`
/// and `j > l` to `+1`; `MixedPrime` swaps the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelSpec {
    FullBk {
        #[serde(flatten)]
        params: ModelParams,
    },
    Lower {
        #[serde(flatten)]
        params: ModelParams,
        k: u64,
    },
    Upper {
        #[serde(flatten)]
        params: ModelParams,
        k: u64,
    },
    Mixed {
        #[serde(flatten)]
        params: ModelParams,
        k: u64,
        l: u64,
    },
    MixedPrime {
        #[serde(flatten)]
        params: ModelParams,
        k: u64,
        l: u64,
    },
    Table {
        #[serde(flatten)]
        table: TableKernel,
    },
}

/// Explicit mixture form of a finite-order BK truncation:
/// `P(+1|x) = base + sum_j weight_j 1{window_j(x) > 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub order: usize,
    pub epsilon: Rational,
    /// `(offset, length, lambda_bar_j)` for `j = 1..=k`.
    pub windows: Vec<(usize, usize, Rational)>,
    /// `epsilon` plus the constant mass that emits `+1`.
    pub base: Rational,
    weights_f64: Vec<f64>,
    base_f64: f64,
}

impl Mixture {
    fn new(order: usize, epsilon: Rational, windows: Vec<(usize, usize, Rational)>, base: Rational) -> Self {
        let weights_f64 = windows.iter().map(|w| to_f64(&w.2)).collect();
        let base_f64 = to_f64(&base);
        Mixture {
            order,
            epsilon,
            windows,
            base,
            weights_f64,
            base_f64,
        }
    }

    fn window_positive(idx: usize, offset: usize, m: usize) -> bool {
        let bits = (idx >> offset) & mask(m);
        2 * bits.count_ones() as usize > m
    }

    /// `P(+1 | Context::from_index(idx, order))`.
    pub fn plus_rat(&self, idx: usize) -> Rational {
        let mut p = self.base.clone();
        for &(o, m, ref w) in &self.windows {
            if Self::window_positive(idx, o, m) {
                p += w;
            }
        }
        p
    }

    pub fn plus_f64(&self, idx: usize) -> f64 {
        let mut p = self.base_f64;
        for (i, &(o, m, _)) in self.windows.iter().enumerate() {
            if Self::window_positive(idx, o, m) {
                p += self.weights_f64[i];
            }
        }
        p
    }

    pub fn eval(&self, a: Spin, ctx: &Context) -> Result<Rational> {
        if ctx.order() < self.order {
            return Err(Error::ContextTooShort {
                needed: self.order,
                got: ctx.order(),
            });
        }
        let mut p = self.base.clone();
        for &(o, m, ref w) in &self.windows {
            if ctx.window_sum(o, m) > 0 {
                p += w;
            }
        }
        Ok(match a {
            Spin::Plus => p,
            Spin::Minus => Rational::one() - p,
        })
    }
}

fn mask(m: usize) -> usize {
    if m >= usize::BITS as usize {
        usize::MAX
    } else {
        (1usize << m) - 1
    }
}

/// A finite-order kernel in a form suitable for exhaustive computation.
#[derive(Debug, Clone, PartialEq)]
pub enum FiniteKernel {
    Mixture(Mixture),
    Table(TableKernel),
}

impl FiniteKernel {
    pub fn order(&self) -> usize {
        match self {
            FiniteKernel::Mixture(m) => m.order,
            FiniteKernel::Table(t) => t.order(),
        }
    }

    pub fn plus_rat(&self, idx: usize) -> Rational {
        match self {
            FiniteKernel::Mixture(m) => m.plus_rat(idx),
            FiniteKernel::Table(t) => t.plus()[idx].clone(),
        }
    }

    pub fn plus_f64(&self, idx: usize) -> f64 {
        match self {
            FiniteKernel::Mixture(m) => m.plus_f64(idx),
            FiniteKernel::Table(t) => t.plus_f64()[idx],
        }
    }

    pub fn to_table(&self) -> Result<TableKernel> {
        match self {
            FiniteKernel::Table(t) => Ok(t.clone()),
            FiniteKernel::Mixture(m) => {
                TableKernel::new(m.order, (0..1usize << m.order).map(|i| m.plus_rat(i)).collect())
            }
        }
    }
}

/// `p_[m](a x)`: `1 - epsilon` when `a` agrees with the majority of the window.
///
/// The window is `ctx.symbols()[offset .. offset + m]`; `m = 0` gives
/// `1 - epsilon` for `a = +1` and `epsilon` for `a = -1`.
pub fn majority_eval_with(a: Spin, ctx: &Context, m: usize, offset: usize, epsilon: &Rational) -> Result<Rational> {
    if m == 0 {
        return Ok(match a {
            Spin::Plus => Rational::one() - epsilon,
            Spin::Minus => epsilon.clone(),
        });
    }
    if m % 2 == 0 {
        return Err(param(format!("majority window {m} must be odd")));
    }
    if ctx.order() < m + offset {
        return Err(Error::ContextTooShort {
            needed: m + offset,
            got: ctx.order(),
        });
    }
    let s = a.value() as i64 * ctx.window_sum(offset, m);
    Ok(if s > 0 {
        Rational::one() - epsilon
    } else {
        epsilon.clone()
    })
}

pub fn majority_eval(a: Spin, ctx: &Context, m: usize, epsilon: &Rational) -> Result<Rational> {
    majority_eval_with(a, ctx, m, 0, epsilon)
}

impl KernelSpec {
    pub fn lower(params: ModelParams, k: u64) -> Self {
        KernelSpec::Lower { params, k }
    }

    pub fn upper(params: ModelParams, k: u64) -> Self {
        KernelSpec::Upper { params, k }
    }

    pub fn mixed(params: ModelParams, k: u64, l: u64) -> Self {
        KernelSpec::Mixed { params, k, l }
    }

    pub fn mixed_prime(params: ModelParams, k: u64, l: u64) -> Self {
        KernelSpec::MixedPrime { params, k, l }
    }

    pub fn table(table: TableKernel) -> Self {
        KernelSpec::Table { table }
    }

    pub fn params(&self) -> Option<&ModelParams> {
        match self {
            KernelSpec::FullBk { params }
            | KernelSpec::Lower { params, .. }
            | KernelSpec::Upper { params, .. }
            | KernelSpec::Mixed { params, .. }
            | KernelSpec::MixedPrime { params, .. } => Some(params),
            KernelSpec::Table { .. } => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            KernelSpec::FullBk { .. } => "full_bk".into(),
            KernelSpec::Lower { k, .. } => format!("lower({k})"),
            KernelSpec::Upper { k, .. } => format!("upper({k})"),
            KernelSpec::Mixed { k, l, .. } => format!("mixed({k},{l})"),
            KernelSpec::MixedPrime { k, l, .. } => format!("mixed_prime({k},{l})"),
            KernelSpec::Table { table } => format!("table(order {})", table.order()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.params() {
            p.validate()?;
        }
        match self {
            KernelSpec::Mixed { k, l, .. } | KernelSpec::MixedPrime { k, l, .. } if l <= k => {
                Err(param(format!("mixed kernel needs l > k, got k={k}, l={l}")))
            }
            _ => Ok(()),
        }
    }

    /// Markov order; `FullBk` has infinite order and is rejected.
    pub fn markov_order(&self) -> Result<usize> {
        match self {
            KernelSpec::FullBk { .. } => Err(precondition("the full BK kernel has infinite order")),
            KernelSpec::Lower { params, k }
            | KernelSpec::Upper { params, k }
            | KernelSpec::Mixed { params, k, .. }
            | KernelSpec::MixedPrime { params, k, .. } => params.context_order(*k),
            KernelSpec::Table { table } => Ok(table.order()),
        }
    }

    /// The mixture form of a finite-order BK variant.
    pub fn mixture(&self) -> Result<Mixture> {
        self.validate()?;
        let (params, k) = match self {
            KernelSpec::Lower { params, k }
            | KernelSpec::Upper { params, k }
            | KernelSpec::Mixed { params, k, .. }
            | KernelSpec::MixedPrime { params, k, .. } => (params, *k),
            _ => return Err(precondition(format!("{} has no finite mixture form", self.name()))),
        };
        let windows = (1..=k)
            .map(|j| {
                let (o, m) = params.window(j)?;
                Ok((o, m, params.lambda_bar(j)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let plus_mass = match self {
            KernelSpec::Lower { .. } => params.lambda_bar_tail(k + 1)?,
            KernelSpec::Upper { .. } => Rational::zero(),
            KernelSpec::Mixed { l, .. } => params.lambda_bar_tail(l + 1)?,
            KernelSpec::MixedPrime { l, .. } => params.lambda_bar_partial(k + 1, *l)?,
            _ => unreachable!(),
        };
        let base = &params.epsilon + plus_mass;
        Ok(Mixture::new(params.context_order(k)?, params.epsilon.clone(), windows, base))
    }

    pub fn finite(&self) -> Result<FiniteKernel> {
        match self {
            KernelSpec::Table { table } => Ok(FiniteKernel::Table(table.clone())),
            _ => Ok(FiniteKernel::Mixture(self.mixture()?)),
        }
    }

    /// Table realization, for orders up to `MAX_TABLE_ORDER`.
    pub fn to_table(&self) -> Result<TableKernel> {
        self.finite()?.to_table()
    }

    /// `P(a | ctx)` for any finite-order variant; `FullBk` is answered only
    /// when `ctx` resolves every component (see [`bk_eval_bounded`]).
    pub fn eval(&self, a: Spin, ctx: &Context) -> Result<Rational> {
        match self {
            KernelSpec::Table { table } => table.eval(a, ctx),
            KernelSpec::FullBk { params } => {
                let (lo, hi) = bk_eval_bounded(params, a, ctx)?;
                if lo == hi {
                    Ok(lo)
                } else {
                    Err(precondition(
                        "context does not resolve every mixture component; use bk_eval_bounded",
                    ))
                }
            }
            _ => self.mixture()?.eval(a, ctx),
        }
    }

    pub fn is_attractive(&self) -> Result<bool> {
        match self {
            KernelSpec::Table { table } => Ok(table.is_attractive()),
            // Every majority indicator is monotone and every other term constant.
            KernelSpec::FullBk { .. } => Ok(true),
            _ => {
                self.mixture()?;
                Ok(true)
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, a: Spin, ctx: &Context) -> Result<Rational> {
    spec.eval(a, ctx)
}

/// Interval containing `p(a x)` for every infinite extension `x` of `ctx`.
pub fn bk_eval_bounded(params: &ModelParams, a: Spin, ctx: &Context) -> Result<(Rational, Rational)> {
    params.validate()?;
    let offset = params.convention.offset();
    let m1 = params.orders.get_usize(1)?;
    if ctx.order() < m1 + offset {
        return Err(Error::ContextTooShort {
            needed: m1 + offset,
            got: ctx.order(),
        });
    }
    let support = params.weights.support_len().unwrap_or(u64::MAX);
    let mut lo = params.epsilon.clone();
    let mut j = 1u64;
    while j <= support {
        let m = match params.orders.get(j)?.as_u64().and_then(|m| m.to_usize()) {
            Some(m) if m + offset <= ctx.order() => m,
            _ => break,
        };
        if ctx.window_sum(offset, m) > 0 {
            lo += params.lambda_bar(j)?;
        }
        j += 1;
    }
    let width = params.lambda_bar_tail(j)?;
    let width = if j > support { Rational::zero() } else { width };
    let hi = &lo + &width;
    Ok(match a {
        Spin::Plus => (lo, hi),
        Spin::Minus => (Rational::one() - hi, Rational::one() - lo),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::orders::OrderSequence;
    use crate::kernels::weights::WeightFamily;
    use crate::rational::rat;

    fn two_state() -> ModelParams {
        ModelParams::geometric_quarter(vec![1])
    }

    #[test]
    fn majority_examples() {
        let ctx = Context::from_values(&[1, 1, -1]).unwrap();
        let e = rat(1, 4);
        assert_eq!(majority_eval(Spin::Plus, &ctx, 3, &e).unwrap(), rat(3, 4));
        assert_eq!(majority_eval(Spin::Minus, &ctx, 3, &e).unwrap(), rat(1, 4));
        assert_eq!(majority_eval(Spin::Plus, &Context::empty(), 0, &e).unwrap(), rat(3, 4));
        assert!(majority_eval(Spin::Plus, &ctx, 2, &e).is_err());
        assert!(matches!(
            majority_eval(Spin::Plus, &ctx, 5, &e),
            Err(Error::ContextTooShort { .. })
        ));
    }

    #[test]
    fn lower_two_state_values() {
        let s = KernelSpec::lower(two_state(), 1);
        let plus = Context::from_values(&[1]).unwrap();
        let minus = Context::from_values(&[-1]).unwrap();
        assert_eq!(s.eval(Spin::Plus, &plus).unwrap(), rat(3, 4));
        assert_eq!(s.eval(Spin::Plus, &minus).unwrap(), rat(7, 12));
        let u = KernelSpec::upper(two_state(), 1);
        assert_eq!(u.eval(Spin::Plus, &plus).unwrap(), rat(5, 12));
        assert_eq!(u.eval(Spin::Plus, &minus).unwrap(), rat(1, 4));
        let z = KernelSpec::lower(two_state(), 0);
        assert_eq!(z.eval(Spin::Plus, &Context::empty()).unwrap(), rat(3, 4));
    }

    #[test]
    fn mixed_rejects_misordered_indices() {
        let s = KernelSpec::mixed(two_state(), 1, 1);
        assert!(s.eval(Spin::Plus, &Context::from_values(&[1]).unwrap()).is_err());
    }

    #[test]
    fn bounded_full_bk() {
        let p = ModelParams::new(rat(1, 4), WeightFamily::Corollary1, OrderSequence::odd_integers()).unwrap();
        let ctx = Context::from_values(&[1]).unwrap();
        let (lo, hi) = bk_eval_bounded(&p, Spin::Plus, &ctx).unwrap();
        assert_eq!(lo, rat(5, 12));
        assert_eq!(&hi - &lo, rat(1, 3));
        let (lo2, hi2) = bk_eval_bounded(&p, Spin::Minus, &ctx).unwrap();
        assert_eq!(&lo + &hi2, Rational::one());
        assert_eq!(&hi + &lo2, Rational::one());
        assert!(bk_eval_bounded(&p, Spin::Plus, &Context::empty()).is_err());
    }

    #[test]
    fn finite_support_resolves_exactly() {
        let p = ModelParams::new(
            rat(1, 4),
            WeightFamily::ExplicitFinite {
                head: vec![rat(1, 2), rat(1, 2)],
                tail: None,
            },
            OrderSequence::explicit(vec![1, 3]),
        )
        .unwrap();
        let ctx = Context::from_values(&[1, -1, -1]).unwrap();
        let (lo, hi) = bk_eval_bounded(&p, Spin::Plus, &ctx).unwrap();
        assert_eq!(lo, hi);
        let full = KernelSpec::FullBk { params: p };
        assert_eq!(full.eval(Spin::Plus, &ctx).unwrap(), lo);
    }

    #[test]
    fn spec_json_shape() {
        let s = KernelSpec::lower(two_state(), 1);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["variant"], "lower");
        assert_eq!(v["epsilon"], "1/4");
        assert_eq!(v["k"], 1);
        assert_eq!(v["weights"]["kind"], "corollary1");
        let back: KernelSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }
}
