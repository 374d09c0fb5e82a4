//! Joint kernels on pairs of contexts: the Hulse coupling of two tables and
//! the shared-uniform coupling of two interval partitions.

use num_traits::{One, Zero};

use crate::error::{param, precondition, Error, Result};
use crate::kernels::{Action, FiniteKernel, IntervalPartition, Spin, TableKernel};
use crate::rational::{to_f64, Rational};

/// Largest context order accepted for pair chains (`4^order` states).
pub const JOINT_ORDER_CAP: usize = 9;

/// Outcome slots of a joint step, first symbol from the first chain:
/// `(+,+)`, `(+,-)`, `(-,+)`, `(-,-)`.
pub const OUTCOMES: [(usize, usize); 4] = [(1, 1), (1, 0), (0, 1), (0, 0)];

fn check_joint_order(order: usize) -> Result<()> {
    if order > JOINT_ORDER_CAP {
        return Err(Error::StateSpaceTooLarge {
            states: 1u128 << (2 * order).min(127),
            cap: 1u128 << (2 * JOINT_ORDER_CAP),
        });
    }
    Ok(())
}

/// Joint probabilities `p(a x, b y)` for every pair `(x, y)` of order-`order`
/// contexts; pair index is `x | y << order`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledKernel {
    pub order: usize,
    pub entries: Vec<[Rational; 4]>,
}

/// `p(+x,+y) = min(gA(+x), gB(+y))`, the remaining entries fixed by the marginals.
pub fn hulse_coupling(a: &TableKernel, b: &TableKernel) -> Result<CoupledKernel> {
    if a.order() != b.order() {
        return Err(param(format!(
            "coupled kernels have orders {} and {}",
            a.order(),
            b.order()
        )));
    }
    if !a.is_attractive() || !b.is_attractive() {
        return Err(precondition("Hulse coupling needs attractive kernels"));
    }
    if !a.is_strictly_positive() || !b.is_strictly_positive() {
        return Err(precondition("Hulse coupling needs strictly positive kernels"));
    }
    let m = a.order();
    check_joint_order(m)?;
    let n = 1usize << m;
    let mut entries = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            let ga = &a.plus()[x];
            let gb = &b.plus()[y];
            let pp = ga.min(gb).clone();
            let pm = ga - &pp;
            let mp = gb - &pp;
            let mm = Rational::one() - ga - gb + &pp;
            if [&pp, &pm, &mp, &mm].iter().any(|v| *v < &Rational::zero()) {
                return Err(Error::Numeric(format!("negative coupled entry at pair ({x}, {y})")));
            }
            entries.push([pp, pm, mp, mm]);
        }
    }
    Ok(CoupledKernel { order: m, entries })
}

impl CoupledKernel {
    /// `(sum over b, sum over a)` of the `+` entries at pair `(x, y)`.
    pub fn marginals(&self, x: usize, y: usize) -> (Rational, Rational) {
        let e = &self.entries[x | (y << self.order)];
        (&e[0] + &e[1], &e[0] + &e[2])
    }

    pub fn to_joint(&self) -> JointKernel {
        JointKernel {
            order: self.order,
            probs: self
                .entries
                .iter()
                .map(|e| [to_f64(&e[0]), to_f64(&e[1]), to_f64(&e[2]), to_f64(&e[3])])
                .collect(),
        }
    }
}

/// A Markov chain on pairs of order-`order` contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct JointKernel {
    pub order: usize,
    pub probs: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointStationary {
    pub weights: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn majority_bits(idx: usize, offset: usize, window: usize) -> usize {
    let bits = (idx >> offset) & ((1usize << window) - 1);
    (2 * bits.count_ones() as usize > window) as usize
}

fn apply_bits(action: &Action, idx: usize) -> usize {
    match *action {
        Action::Emit { symbol } => (symbol == Spin::Plus) as usize,
        Action::Majority { offset, window, .. } => majority_bits(idx, offset, window),
    }
}

/// Overlaps of the cells of two partitions: `(length, action_a, action_b)`.
fn overlaps(a: &IntervalPartition, b: &IntervalPartition) -> Vec<(Rational, Action, Action)> {
    let ca: Vec<_> = a.all_cells().filter(|c| c.lo < c.hi).collect();
    let cb: Vec<_> = b.all_cells().filter(|c| c.lo < c.hi).collect();
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < ca.len() && j < cb.len() {
        let lo = ca[i].lo.clone().max(cb[j].lo.clone());
        let hi = ca[i].hi.clone().min(cb[j].hi.clone());
        if lo < hi {
            out.push((hi - lo, ca[i].action, cb[j].action));
        }
        if ca[i].hi <= cb[j].hi {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

impl JointKernel {
    /// Both chains driven by one uniform: cell `u` of `a` and cell `u` of `b`.
    pub fn shared_uniform(a: &IntervalPartition, b: &IntervalPartition) -> Result<JointKernel> {
        a.check_cover()?;
        b.check_cover()?;
        let m = a.order().max(b.order());
        check_joint_order(m)?;
        let pieces: Vec<(f64, Action, Action)> = overlaps(a, b)
            .into_iter()
            .map(|(len, x, y)| (to_f64(&len), x, y))
            .collect();
        let n = 1usize << m;
        let mut probs = vec![[0.0f64; 4]; n * n];
        for y in 0..n {
            for x in 0..n {
                let row = &mut probs[x | (y << m)];
                for (len, ax, by) in &pieces {
                    let s = apply_bits(ax, x);
                    let t = apply_bits(by, y);
                    let slot = OUTCOMES.iter().position(|&o| o == (s, t)).unwrap();
                    row[slot] += len;
                }
            }
        }
        Ok(JointKernel { order: m, probs })
    }

    /// Threshold coupling on one uniform, `u < gA` and `u < gB`; in floating
    /// point, and without the attractivity checks of [`hulse_coupling`].
    pub fn threshold(a: &FiniteKernel, b: &FiniteKernel) -> Result<JointKernel> {
        let m = a.order().max(b.order());
        let ta = a.to_table()?.lift(m)?;
        let tb = b.to_table()?.lift(m)?;
        check_joint_order(m)?;
        let n = 1usize << m;
        let mut probs = Vec::with_capacity(n * n);
        for y in 0..n {
            for x in 0..n {
                let ga = ta.plus_f64()[x];
                let gb = tb.plus_f64()[y];
                let pp = ga.min(gb);
                probs.push([pp, ga - pp, gb - pp, (1.0 - ga - gb + pp).max(0.0)]);
            }
        }
        Ok(JointKernel { order: m, probs })
    }

    pub fn states(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    fn successor(&self, pair: usize, slot: usize) -> usize {
        let m = self.order;
        let mask = (1usize << m) - 1;
        let (x, y) = (pair & mask, pair >> m);
        let (a, b) = OUTCOMES[slot];
        (((x << 1) | a) & mask) | ((((y << 1) | b) & mask) << m)
    }

    fn step(&self, dist: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; dist.len()];
        for (pair, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for slot in 0..4 {
                let p = self.probs[pair][slot];
                if p > 0.0 {
                    next[self.successor(pair, slot)] += w * p;
                }
            }
        }
        next
    }

    /// Stationary law by power iteration from the uniform distribution.
    pub fn stationary(&self, tolerance: f64, max_iterations: usize) -> Result<JointStationary> {
        let n = self.states();
        let mut dist = vec![1.0 / n as f64; n];
        for it in 1..=max_iterations {
            let next = self.step(&dist);
            let diff: f64 = next.iter().zip(&dist).map(|(a, b)| (a - b).abs()).sum();
            dist = next;
            if diff < tolerance {
                let total: f64 = dist.iter().sum();
                dist.iter_mut().for_each(|v| *v /= total);
                let residual = self
                    .step(&dist)
                    .iter()
                    .zip(&dist)
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                return Ok(JointStationary {
                    weights: dist,
                    residual,
                    iterations: it,
                });
            }
        }
        Err(Error::Numeric(format!(
            "joint power iteration did not reach {tolerance:e} within {max_iterations} sweeps"
        )))
    }

    /// Probability that the next two symbols differ under `dist`.
    pub fn disagreement(&self, dist: &[f64]) -> f64 {
        dist.iter()
            .zip(&self.probs)
            .map(|(w, p)| w * (p[1] + p[2]))
            .sum()
    }

    /// Probability that the next first-chain symbol is `-1` while the second is `+1`.
    pub fn first_below(&self, dist: &[f64]) -> f64 {
        dist.iter().zip(&self.probs).map(|(w, p)| w * p[2]).sum()
    }

    /// Probabilities that the next symbols are `+1`, per chain.
    pub fn plus_marginals(&self, dist: &[f64]) -> (f64, f64) {
        dist.iter().zip(&self.probs).fold((0.0, 0.0), |(a, b), (w, p)| {
            (a + w * (p[0] + p[1]), b + w * (p[0] + p[2]))
        })
    }

    /// Start at the pair of constant pasts `(first, second)`; entry `t`
    /// is the probability that the symbols emitted at step `t + 1` differ.
    pub fn propagate(&self, first: Spin, second: Spin, steps: usize) -> Vec<f64> {
        let m = self.order;
        let full = (1usize << m) - 1;
        let x = if first == Spin::Plus { full } else { 0 };
        let y = if second == Spin::Plus { full } else { 0 };
        let mut dist = vec![0.0; self.states()];
        dist[x | (y << m)] = 1.0;
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            out.push(self.disagreement(&dist));
            dist = self.step(&dist);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{build_partition, build_primed_partition, KernelSpec, ModelParams};
    use crate::rational::rat;

    fn table(spec: &KernelSpec) -> TableKernel {
        spec.to_table().unwrap()
    }

    #[test]
    fn hulse_marginals_are_exact() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let a = table(&KernelSpec::lower(p.clone(), 2));
        let b = table(&KernelSpec::upper(p, 2));
        let c = hulse_coupling(&a, &b).unwrap();
        let n = 1 << c.order;
        for x in 0..n {
            for y in 0..n {
                let (ma, mb) = c.marginals(x, y);
                assert_eq!(ma, a.plus()[x]);
                assert_eq!(mb, b.plus()[y]);
                let e = &c.entries[x | (y << c.order)];
                assert_eq!(e.iter().fold(Rational::zero(), |s, v| s + v), Rational::one());
            }
        }
    }

    #[test]
    fn equal_kernels_couple_on_the_diagonal() {
        let g = table(&KernelSpec::lower(ModelParams::geometric_quarter(vec![3]), 1));
        let c = hulse_coupling(&g, &g).unwrap();
        for x in 0..8 {
            let e = &c.entries[x | (x << 3)];
            assert!(e[1].is_zero() && e[2].is_zero());
        }
        let j = c.to_joint();
        let st = j.stationary(1e-14, 100_000).unwrap();
        assert!(j.disagreement(&st.weights) < 1e-12);
    }

    #[test]
    fn ordered_coupling_never_inverts() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let a = table(&KernelSpec::lower(p.clone(), 1));
        let b = table(&KernelSpec::upper(p, 1));
        let j = hulse_coupling(&a, &b).unwrap().to_joint();
        let st = j.stationary(1e-15, 100_000).unwrap();
        assert!(j.first_below(&st.weights) < 1e-12);
        // disagreement equals the marginal difference 7/10 - 3/10
        assert!((j.disagreement(&st.weights) - 0.4).abs() < 1e-10);
    }

    #[test]
    fn shared_uniform_rows_match_kernels() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let y = KernelSpec::mixed(p.clone(), 0, 2);
        let pa = build_partition(&y, 2).unwrap();
        let pb = build_primed_partition(&p, 0, 1).unwrap();
        let j = JointKernel::shared_uniform(&pa, &pb).unwrap();
        let ga = y.to_table().unwrap().lift(j.order).unwrap();
        let gb = KernelSpec::mixed_prime(p, 0, 2).to_table().unwrap().lift(j.order).unwrap();
        let n = 1 << j.order;
        for x in 0..n {
            for z in 0..n {
                let row = j.probs[x | (z << j.order)];
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((row[0] + row[1] - ga.plus_f64()[x]).abs() < 1e-12);
                assert!((row[0] + row[2] - gb.plus_f64()[z]).abs() < 1e-12);
            }
        }
        let _ = rat(1, 2);
    }

    #[test]
    fn propagation_from_equal_pasts_stays_coupled() {
        let g = KernelSpec::lower(ModelParams::geometric_quarter(vec![3]), 1);
        let part = build_partition(&g, 1).unwrap();
        let j = JointKernel::shared_uniform(&part, &part).unwrap();
        assert!(j.propagate(Spin::Plus, Spin::Plus, 20).iter().all(|&d| d == 0.0));
        let gap = j.propagate(Spin::Plus, Spin::Minus, 200);
        assert!(gap[0] > 0.0 && gap[199] < gap[0]);
    }
}
