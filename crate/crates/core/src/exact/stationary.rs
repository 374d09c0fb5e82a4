//! Stationary laws of context chains: state `s` (an order-`m` context) moves
//! to `push(s, a)` with probability `P(a | s)`.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Context, FiniteKernel, Spin};
use crate::rational::{format_rational, to_f64, Rational};

/// Largest order solved by exact rational elimination.
pub const EXACT_ORDER_CAP: usize = 6;
/// Largest order solved by a dense floating-point factorization.
pub const DENSE_ORDER_CAP: usize = 10;
/// Largest order handled at all (power iteration).
pub const ITERATIVE_ORDER_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    ExactRational,
    DenseLu,
    PowerIteration,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub exact_order_cap: usize,
    pub dense_order_cap: usize,
    pub max_order: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            exact_order_cap: EXACT_ORDER_CAP,
            dense_order_cap: DENSE_ORDER_CAP,
            max_order: ITERATIVE_ORDER_CAP,
            tolerance: 1e-14,
            max_iterations: 200_000,
        }
    }
}

/// Weights over all `2^order` contexts (`Context::index` encoding).
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    pub order: usize,
    pub weights: Vec<f64>,
    pub exact: Option<Vec<Rational>>,
    /// `sum_s pi(s) P(+1 | s)`, the one-symbol marginal.
    pub marginal_plus: f64,
    pub marginal_plus_exact: Option<Rational>,
    /// `|| pi P - pi ||_1`.
    pub residual: f64,
    pub method: SolveMethod,
}

#[inline]
fn succ(s: usize, a: usize, mask: usize) -> usize {
    ((s << 1) | a) & mask
}

fn check_order(order: usize, cap: usize) -> Result<()> {
    if order > cap {
        return Err(Error::StateSpaceTooLarge {
            states: 1u128 << order.min(127),
            cap: 1u128 << cap,
        });
    }
    Ok(())
}

fn residual(plus: &[f64], pi: &[f64], mask: usize) -> f64 {
    let mut next = vec![0.0; pi.len()];
    for (s, &w) in pi.iter().enumerate() {
        next[succ(s, 1, mask)] += w * plus[s];
        next[succ(s, 0, mask)] += w * (1.0 - plus[s]);
    }
    next.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

/// Gaussian elimination over the rationals for `pi (P - I) = 0`, `sum pi = 1`.
fn solve_exact(kernel: &FiniteKernel) -> Vec<Rational> {
    let n = 1usize << kernel.order();
    let mask = n - 1;
    // Row i of the system is the balance equation at state i: a[i][s] = P(s -> i) - [s == i].
    let mut a = vec![vec![Rational::zero(); n + 1]; n];
    for s in 0..n {
        let p = kernel.plus_rat(s);
        let q = Rational::one() - &p;
        a[succ(s, 1, mask)][s] += p;
        a[succ(s, 0, mask)][s] += q;
        a[s][s] -= Rational::one();
    }
    for v in a[n - 1].iter_mut() {
        *v = Rational::one();
    }
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("stationary system is regular");
        a.swap(col, piv);
        let inv = Rational::one() / &a[col][col];
        for v in a[col][col..].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for c in col..=n {
                if !pivot_row[c].is_zero() {
                    row[c] -= &f * &pivot_row[c];
                }
            }
        }
    }
    a.into_iter().map(|row| row[n].clone()).collect()
}

fn solve_dense(plus: &[f64]) -> Result<Vec<f64>> {
    let n = plus.len();
    let mask = n - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        m[(succ(s, 1, mask), s)] += plus[s];
        m[(succ(s, 0, mask), s)] += 1.0 - plus[s];
        m[(s, s)] -= 1.0;
    }
    for c in 0..n {
        m[(n - 1, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular stationary system".into()))?;
    Ok(x.iter().map(|v| v.max(0.0)).collect())
}

fn solve_power(plus: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = plus.len();
    let mask = n - 1;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, &w) in pi.iter().enumerate() {
            next[succ(s, 1, mask)] += w * plus[s];
            next[succ(s, 0, mask)] += w * (1.0 - plus[s]);
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < tol {
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|v| *v /= total);
            return Ok(pi);
        }
    }
    Err(Error::Numeric(format!(
        "power iteration did not reach {tol:e} within {max_iter} sweeps"
    )))
}

pub fn stationary(kernel: &FiniteKernel) -> Result<StateDistribution> {
    stationary_with(kernel, &SolveOptions::default())
}

pub fn stationary_with(kernel: &FiniteKernel, opts: &SolveOptions) -> Result<StateDistribution> {
    let order = kernel.order();
    check_order(order, opts.max_order)?;
    let n = 1usize << order;
    let mask = n - 1;
    let plus: Vec<f64> = (0..n).map(|s| kernel.plus_f64(s)).collect();
    let (weights, exact, method) = if order <= opts.exact_order_cap {
        let ex = solve_exact(kernel);
        (ex.iter().map(to_f64).collect::<Vec<_>>(), Some(ex), SolveMethod::ExactRational)
    } else if order <= opts.dense_order_cap {
        (solve_dense(&plus)?, None, SolveMethod::DenseLu)
    } else {
        (
            solve_power(&plus, opts.tolerance, opts.max_iterations)?,
            None,
            SolveMethod::PowerIteration,
        )
    };
    if let Some(ex) = &exact {
        if ex.iter().any(|w| w.is_negative()) {
            return Err(Error::Numeric("negative stationary weight".into()));
        }
    }
    let marginal_plus = weights.iter().zip(&plus).map(|(w, p)| w * p).sum();
    let marginal_plus_exact = exact.as_ref().map(|ex| {
        ex.iter()
            .enumerate()
            .map(|(s, w)| w * kernel.plus_rat(s))
            .sum()
    });
    let residual = residual(&plus, &weights, mask);
    Ok(StateDistribution {
        order,
        weights,
        exact,
        marginal_plus,
        marginal_plus_exact,
        residual,
        method,
    })
}

pub fn marginal_plus(dist: &StateDistribution) -> f64 {
    dist.marginal_plus
}

/// `P(X_0 = a, X_1 = b)` indexed `[a][b]` with `-1 -> 0`, `+1 -> 1`.
pub fn pair_marginals(kernel: &FiniteKernel, dist: &StateDistribution) -> [[f64; 2]; 2] {
    let n = 1usize << dist.order;
    let mask = n - 1;
    let mut out = [[0.0; 2]; 2];
    for s in 0..n {
        let w = dist.weights[s];
        let p = kernel.plus_f64(s);
        for a in 0..2 {
            let pa = if a == 1 { p } else { 1.0 - p };
            let t = succ(s, a, mask);
            let q = kernel.plus_f64(t);
            out[a][1] += w * pa * q;
            out[a][0] += w * pa * (1.0 - q);
        }
    }
    out
}

/// Entropy rate `-sum_s pi(s) sum_a P(a|s) ln P(a|s)`.
pub fn entropy(kernel: &FiniteKernel, dist: &StateDistribution) -> Result<f64> {
    let n = 1usize << dist.order;
    let mut h = 0.0;
    for s in 0..n {
        let p = kernel.plus_f64(s);
        if kernel.plus_rat(s).is_zero() || kernel.plus_rat(s).is_one() {
            return Err(Error::ZeroEntry { context: s });
        }
        h -= dist.weights[s] * (p * p.ln() + (1.0 - p) * (1.0 - p).ln());
    }
    Ok(h)
}

/// Context label, most recent symbol first, e.g. `+-+`.
pub fn context_label(idx: usize, order: usize) -> String {
    Context::from_index(idx, order)
        .symbols()
        .iter()
        .map(|s| if *s == Spin::Plus { '+' } else { '-' })
        .collect()
}

/// CSV with header `context,weight[,exact]`.
pub fn distribution_csv(dist: &StateDistribution) -> String {
    let mut out = String::from(if dist.exact.is_some() {
        "context,weight,exact\n"
    } else {
        "context,weight\n"
    });
    for (s, w) in dist.weights.iter().enumerate() {
        let label = context_label(s, dist.order);
        match &dist.exact {
            Some(ex) => out.push_str(&format!("{label},{w:e},{}\n", format_rational(&ex[s]))),
            None => out.push_str(&format!("{label},{w:e}\n")),
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributionSummary {
    pub order: usize,
    pub states: usize,
    pub method: SolveMethod,
    pub marginal_plus: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_plus_exact: Option<String>,
    pub entropy: Option<f64>,
    pub residual: f64,
}

pub fn summary(kernel: &FiniteKernel, dist: &StateDistribution) -> DistributionSummary {
    DistributionSummary {
        order: dist.order,
        states: dist.weights.len(),
        method: dist.method,
        marginal_plus: dist.marginal_plus,
        marginal_plus_exact: dist.marginal_plus_exact.as_ref().map(format_rational),
        entropy: entropy(kernel, dist).ok(),
        residual: dist.residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelSpec, ModelParams, TableKernel};
    use crate::rational::rat;

    #[test]
    fn two_state_lower_and_upper() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let l = KernelSpec::lower(p.clone(), 1).finite().unwrap();
        let d = stationary(&l).unwrap();
        assert_eq!(d.marginal_plus_exact, Some(rat(7, 10)));
        assert!(d.residual < 1e-15);
        let u = KernelSpec::upper(p, 1).finite().unwrap();
        assert_eq!(stationary(&u).unwrap().marginal_plus_exact, Some(rat(3, 10)));
    }

    #[test]
    fn order_zero_is_bernoulli() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let z = KernelSpec::lower(p, 0).finite().unwrap();
        let d = stationary(&z).unwrap();
        assert_eq!(d.marginal_plus_exact, Some(rat(3, 4)));
        let h = entropy(&z, &d).unwrap();
        assert!((h - 0.562_335_144_618_709).abs() < 1e-12);
    }

    #[test]
    fn solvers_agree() {
        let p = ModelParams::geometric_quarter(vec![1, 3, 5]);
        let k = KernelSpec::lower(p, 3).finite().unwrap();
        let exact = stationary(&k).unwrap();
        let opts = SolveOptions {
            exact_order_cap: 0,
            ..Default::default()
        };
        let dense = stationary_with(&k, &opts).unwrap();
        let opts = SolveOptions {
            exact_order_cap: 0,
            dense_order_cap: 0,
            ..Default::default()
        };
        let power = stationary_with(&k, &opts).unwrap();
        for s in 0..32 {
            assert!((exact.weights[s] - dense.weights[s]).abs() < 1e-12);
            assert!((exact.weights[s] - power.weights[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn fair_coin_entropy_and_symmetry() {
        let t = TableKernel::constant(2, rat(1, 2)).unwrap();
        let k = FiniteKernel::Table(t);
        let d = stationary(&k).unwrap();
        assert!((entropy(&k, &d).unwrap() - std::f64::consts::LN_2).abs() < 1e-14);
        let sym = TableKernel::new(1, vec![rat(1, 3), rat(2, 3)]).unwrap();
        let ks = FiniteKernel::Table(sym);
        assert_eq!(stationary(&ks).unwrap().marginal_plus_exact, Some(rat(1, 2)));
        let pairs = pair_marginals(&ks, &stationary(&ks).unwrap());
        let total: f64 = pairs.iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_entry_rejected_for_entropy() {
        let t = FiniteKernel::Table(TableKernel::new(1, vec![rat(0, 1), rat(1, 2)]).unwrap());
        let d = stationary(&t).unwrap();
        assert!(matches!(entropy(&t, &d), Err(Error::ZeroEntry { context: 0 })));
    }
}
