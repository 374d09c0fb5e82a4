//! Update rules driven by 53-bit uniforms, and the chain state they act on.

use crate::error::{precondition, Result};
use crate::kernels::{build_partition, Action, Context, IntervalPartition, KernelSpec, Spin};
use crate::rational::{uniform_threshold, UNIFORM_BITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Emit(i8),
    Window(usize),
}

/// A deterministic map `(u, past) -> symbol`, monotone in the past for
/// attractive kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateRule {
    /// Partition cells; `u` selects a cell whose action is applied.
    Partition {
        order: usize,
        thresholds: Vec<u64>,
        steps: Vec<Step>,
        windows: Vec<(usize, usize)>,
    },
    /// `+1` iff `u < P(+1 | ctx)`.
    Table { order: usize, thresholds: Vec<u64> },
}

impl UpdateRule {
    /// Standard rule: the interval partition for BK variants, the threshold
    /// rule for tables.
    pub fn from_spec(spec: &KernelSpec) -> Result<UpdateRule> {
        match spec {
            KernelSpec::Table { table } => Ok(UpdateRule::Table {
                order: table.order(),
                thresholds: table.plus().iter().map(uniform_threshold).collect(),
            }),
            KernelSpec::FullBk { .. } => Err(precondition("the full BK kernel has no finite update rule")),
            KernelSpec::Lower { k, .. } | KernelSpec::Upper { k, .. } => {
                Self::from_partition(&build_partition(spec, *k)?)
            }
            KernelSpec::Mixed { l, .. } | KernelSpec::MixedPrime { l, .. } => {
                Self::from_partition(&build_partition(spec, *l)?)
            }
        }
    }

    pub fn from_partition(p: &IntervalPartition) -> Result<UpdateRule> {
        p.check_cover()?;
        let c = p.compile();
        let mut windows: Vec<(usize, usize)> = Vec::new();
        let steps = c
            .actions
            .iter()
            .map(|a| match *a {
                Action::Emit { symbol } => Step::Emit(symbol.value()),
                Action::Majority { offset, window, .. } => {
                    let key = (offset, window);
                    let w = windows.iter().position(|&x| x == key).unwrap_or_else(|| {
                        windows.push(key);
                        windows.len() - 1
                    });
                    Step::Window(w)
                }
            })
            .collect();
        Ok(UpdateRule::Partition {
            order: p.order(),
            thresholds: c.thresholds,
            steps,
            windows,
        })
    }

    pub fn order(&self) -> usize {
        match self {
            UpdateRule::Partition { order, .. } | UpdateRule::Table { order, .. } => *order,
        }
    }

    fn windows(&self) -> &[(usize, usize)] {
        match self {
            UpdateRule::Partition { windows, .. } => windows,
            UpdateRule::Table { .. } => &[],
        }
    }

    pub fn new_state(&self, past: &Past) -> Result<ChainState> {
        ChainState::new(self.order(), self.windows(), past)
    }

    /// Apply the rule to `state` with uniform `u`, push and return the symbol.
    #[inline]
    pub fn step(&self, state: &mut ChainState, u: u64) -> Spin {
        let s: i8 = match self {
            UpdateRule::Table { thresholds, .. } => {
                if u < thresholds[state.ctx] {
                    1
                } else {
                    -1
                }
            }
            UpdateRule::Partition {
                thresholds, steps, ..
            } => {
                let i = thresholds.partition_point(|&t| t <= u).min(steps.len() - 1);
                match steps[i] {
                    Step::Emit(v) => v,
                    Step::Window(w) => {
                        if state.sums[w] > 0 {
                            1
                        } else {
                            -1
                        }
                    }
                }
            }
        };
        state.push(s);
        if s > 0 {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }
}

/// Initial condition of a forward run.
#[derive(Debug, Clone, PartialEq)]
pub enum Past {
    /// `...s s s`: the whole infinite past equals `s`.
    Constant(Spin),
    Finite(Context),
}

/// Ring buffer of recent symbols plus running window sums.
#[derive(Debug, Clone)]
pub struct ChainState {
    buf: Vec<i8>,
    mask: usize,
    head: usize,
    windows: Vec<(usize, usize)>,
    sums: Vec<i64>,
    /// Bit `i` holds the symbol at lag `i + 1` (+1 -> 1), for small orders.
    ctx: usize,
    ctx_mask: usize,
}

impl ChainState {
    fn new(order: usize, windows: &[(usize, usize)], past: &Past) -> Result<ChainState> {
        let cap = (order + 1).next_power_of_two();
        let init: Vec<i8> = match past {
            Past::Constant(s) => vec![s.value(); order],
            Past::Finite(ctx) => {
                if ctx.order() < order {
                    return Err(crate::error::Error::ContextTooShort {
                        needed: order,
                        got: ctx.order(),
                    });
                }
                ctx.symbols()[..order].iter().map(|s| s.value()).collect()
            }
        };
        let mut buf = vec![0i8; cap];
        buf[..order].copy_from_slice(&init);
        let sums = windows
            .iter()
            .map(|&(o, m)| init[o..o + m].iter().map(|&v| v as i64).sum())
            .collect();
        let ctx_mask = if order < usize::BITS as usize { (1usize << order) - 1 } else { usize::MAX };
        let ctx = if order <= 40 {
            init.iter()
                .enumerate()
                .fold(0usize, |acc, (i, &v)| acc | (((v > 0) as usize) << i))
        } else {
            0
        };
        Ok(ChainState {
            buf,
            mask: cap - 1,
            head: 0,
            windows: windows.to_vec(),
            sums,
            ctx,
            ctx_mask,
        })
    }

    #[inline]
    fn lag(&self, i: usize) -> i8 {
        self.buf[(self.head + i) & self.mask]
    }

    #[inline]
    fn push(&mut self, s: i8) {
        for (w, &(o, m)) in self.windows.iter().enumerate() {
            let incoming = if o == 0 { s } else { self.lag(o - 1) };
            let outgoing = self.lag(o + m - 1);
            self.sums[w] += incoming as i64 - outgoing as i64;
        }
        self.head = (self.head + self.mask) & self.mask;
        self.buf[self.head] = s;
        self.ctx = ((self.ctx << 1) | (s > 0) as usize) & self.ctx_mask;
    }

    /// Context index in the `Context::index` encoding.
    pub fn context_index(&self) -> usize {
        self.ctx
    }
}

/// Threshold of `2 epsilon` on 53-bit draws: `U < 2 epsilon` iff `u < base_threshold`.
pub fn base_threshold(epsilon: &crate::Rational) -> u64 {
    uniform_threshold(&(epsilon * crate::rational::int(2)))
}

pub const UNIFORM_ONE: u64 = 1 << UNIFORM_BITS;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ModelParams;

    #[test]
    fn window_sums_track_history() {
        let p = ModelParams::geometric_quarter(vec![1, 3, 5]);
        let spec = KernelSpec::lower(p, 3);
        let rule = UpdateRule::from_spec(&spec).unwrap();
        assert_eq!(rule.order(), 5);
        let mut st = rule.new_state(&Past::Constant(Spin::Minus)).unwrap();
        let mut hist: Vec<i8> = vec![-1; 5];
        let mut x = 12345u64;
        for _ in 0..200 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let s = rule.step(&mut st, x >> 11);
            hist.insert(0, s.value());
            for (w, &(o, m)) in st.windows.iter().enumerate() {
                let direct: i64 = hist[o..o + m].iter().map(|&v| v as i64).sum();
                assert_eq!(st.sums[w], direct);
            }
        }
    }

    #[test]
    fn base_cells_ignore_the_past() {
        let p = ModelParams::geometric_quarter(vec![3]);
        let rule = UpdateRule::from_spec(&KernelSpec::lower(p, 1)).unwrap();
        let mut up = rule.new_state(&Past::Constant(Spin::Plus)).unwrap();
        let mut lo = rule.new_state(&Past::Constant(Spin::Minus)).unwrap();
        // u just below epsilon = 1/4
        let u = (1u64 << 51) - 1;
        assert_eq!(rule.step(&mut up, u), Spin::Minus);
        assert_eq!(rule.step(&mut lo, u), Spin::Minus);
    }
}
