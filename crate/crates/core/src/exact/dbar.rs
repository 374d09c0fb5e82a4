//! Exact d-bar distance between ordered attractive kernels.

use num_traits::Signed;
use serde::Serialize;

use super::stationary::{stationary_with, SolveOptions, StateDistribution};
use crate::error::{precondition, Result};
use crate::kernels::{FiniteKernel, KernelSpec};
use crate::rational::{format_rational, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbarExact {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_exact: Option<String>,
    pub marginal_a: f64,
    pub marginal_b: f64,
    #[serde(skip)]
    pub exact: Option<Rational>,
}

/// Verify that both kernels are attractive and that `a` dominates `b`
/// pointwise; otherwise a precondition error.
pub fn check_ordered_pair(a: &FiniteKernel, b: &FiniteKernel) -> Result<()> {
    let ta = a.to_table()?;
    let tb = b.to_table()?;
    if !ta.is_attractive() || !tb.is_attractive() {
        return Err(precondition("both kernels must be attractive"));
    }
    if !ta.dominates(&tb) {
        return Err(precondition(
            "first kernel does not dominate the second pointwise on P(+1 | .)",
        ));
    }
    Ok(())
}

/// `d(mu_A, mu_B) = mu_A(x_0 = +1) - mu_B(x_0 = +1)` for `A >= B` attractive.
pub fn exact_dbar_attractive(a: &FiniteKernel, b: &FiniteKernel) -> Result<DbarExact> {
    exact_dbar_with(a, b, &SolveOptions::default())
}

pub fn exact_dbar_with(a: &FiniteKernel, b: &FiniteKernel, opts: &SolveOptions) -> Result<DbarExact> {
    check_ordered_pair(a, b)?;
    let da = stationary_with(a, opts)?;
    let db = stationary_with(b, opts)?;
    Ok(from_distributions(&da, &db))
}

pub fn exact_dbar_specs(a: &KernelSpec, b: &KernelSpec) -> Result<DbarExact> {
    exact_dbar_attractive(&a.finite()?, &b.finite()?)
}

fn from_distributions(da: &StateDistribution, db: &StateDistribution) -> DbarExact {
    let exact = match (&da.marginal_plus_exact, &db.marginal_plus_exact) {
        (Some(x), Some(y)) => Some(x - y),
        _ => None,
    };
    let value = match &exact {
        Some(e) => to_f64(e),
        None => (da.marginal_plus - db.marginal_plus).max(0.0),
    };
    debug_assert!(exact.as_ref().is_none_or(|e| !e.is_negative()));
    DbarExact {
        value,
        value_exact: exact.as_ref().map(format_rational),
        marginal_a: da.marginal_plus,
        marginal_b: db.marginal_plus,
        exact,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ModelParams;
    use crate::rational::rat;

    #[test]
    fn order_zero_pair_is_one_minus_two_epsilon() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let d = exact_dbar_specs(&KernelSpec::lower(p.clone(), 0), &KernelSpec::upper(p, 0)).unwrap();
        assert_eq!(d.exact, Some(rat(1, 2)));
    }

    #[test]
    fn two_state_pair() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let d = exact_dbar_specs(&KernelSpec::lower(p.clone(), 1), &KernelSpec::upper(p.clone(), 1)).unwrap();
        assert_eq!(d.exact, Some(rat(2, 5)));
        let same = exact_dbar_specs(&KernelSpec::lower(p.clone(), 1), &KernelSpec::lower(p.clone(), 1)).unwrap();
        assert_eq!(same.value, 0.0);
        assert!(exact_dbar_specs(&KernelSpec::upper(p.clone(), 1), &KernelSpec::lower(p, 1)).is_err());
    }
}
