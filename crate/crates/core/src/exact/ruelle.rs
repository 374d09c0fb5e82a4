//! The transfer operator `(L_g f)(x) = sum_a g(a x) f(a x)`.

use crate::error::{param, Result};
use crate::kernels::FiniteKernel;

/// One application of `L_g` to `f`, a function of order-`m` contexts with
/// `m >= order(g)`; `f.len()` must be `2^m`.
pub fn ruelle_apply(g: &FiniteKernel, f: &[f64]) -> Result<Vec<f64>> {
    let n = f.len();
    if !n.is_power_of_two() {
        return Err(param(format!("function has {n} entries, not a power of two")));
    }
    let m = n.trailing_zeros() as usize;
    if m < g.order() {
        return Err(param(format!(
            "function of order {m} is shorter than the kernel order {}",
            g.order()
        )));
    }
    let mask = n - 1;
    let gmask = (1usize << g.order()) - 1;
    Ok((0..n)
        .map(|x| {
            let p = g.plus_f64(x & gmask);
            let up = ((x << 1) | 1) & mask;
            let down = (x << 1) & mask;
            p * f[up] + (1.0 - p) * f[down]
        })
        .collect())
}

/// `L_g^n h` evaluated at the all-`+1` and all-`-1` pasts.
pub fn ruelle_extremal(g: &FiniteKernel, h: &[f64], iterations: usize) -> Result<(f64, f64)> {
    let mut f = h.to_vec();
    for _ in 0..iterations {
        f = ruelle_apply(g, &f)?;
    }
    Ok((f[f.len() - 1], f[0]))
}

/// Indicator of a `+1` most recent symbol, as a function of order `m >= 1`.
pub fn most_recent_plus(m: usize) -> Vec<f64> {
    (0..1usize << m).map(|x| (x & 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelSpec, ModelParams};

    #[test]
    fn constants_are_fixed() {
        let g = KernelSpec::lower(ModelParams::geometric_quarter(vec![1, 3]), 2)
            .finite()
            .unwrap();
        let one = vec![1.0; 8];
        let out = ruelle_apply(&g, &one).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(ruelle_apply(&g, &[1.0; 4]).is_err());
    }

    #[test]
    fn iteration_reaches_the_stationary_marginal() {
        let g = KernelSpec::lower(ModelParams::geometric_quarter(vec![1]), 1)
            .finite()
            .unwrap();
        let (p, m) = ruelle_extremal(&g, &most_recent_plus(1), 80).unwrap();
        assert!((p - 0.7).abs() < 1e-12 && (m - 0.7).abs() < 1e-12);
    }
}
