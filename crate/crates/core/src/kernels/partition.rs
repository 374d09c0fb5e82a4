//! Interval partitions of `[0, 1)` realizing a kernel as an update function.

use num_traits::{One, Zero};
use serde::Serialize;

use super::params::ModelParams;
use super::spec::KernelSpec;
use super::symbol::{Context, Spin};
use crate::error::{param, precondition, Error, Result};
use crate::rational::{format_rational, uniform_threshold, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Emit { symbol: Spin },
    /// Sign of the sum of `ctx[offset .. offset + window]`.
    Majority { component: u64, offset: usize, window: usize },
}

impl Action {
    pub fn emit(s: Spin) -> Action {
        Action::Emit { symbol: s }
    }

    pub fn apply(&self, ctx: &Context) -> Result<Spin> {
        match *self {
            Action::Emit { symbol } => Ok(symbol),
            Action::Majority { offset, window, .. } => {
                if ctx.order() < offset + window {
                    return Err(Error::ContextTooShort {
                        needed: offset + window,
                        got: ctx.order(),
                    });
                }
                Ok(if ctx.window_sum(offset, window) > 0 {
                    Spin::Plus
                } else {
                    Spin::Minus
                })
            }
        }
    }
}

/// Which mixture components a cell carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellLabel {
    Base { symbol: Spin },
    Block { j: u64 },
    /// Components `from..=to`, or `from..` when `to` is absent.
    Blocks { from: u64, to: Option<u64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    #[serde(serialize_with = "ser_rat")]
    pub lo: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub hi: Rational,
    #[serde(flatten)]
    pub action: Action,
    pub label: CellLabel,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

impl Cell {
    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }
}

/// Sorted half-open cells; `residual` (if present) is the last cell and
/// lumps every deeper component with a common action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalPartition {
    pub cells: Vec<Cell>,
    pub residual: Option<Cell>,
}

impl IntervalPartition {
    pub fn all_cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().chain(self.residual.iter())
    }

    pub fn residual_action(&self) -> Option<Action> {
        self.residual.as_ref().map(|c| c.action)
    }

    /// Context length read by the Majority actions.
    pub fn order(&self) -> usize {
        self.all_cells()
            .map(|c| match c.action {
                Action::Majority { offset, window, .. } => offset + window,
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// Checks sortedness, disjointness and exact coverage of `[0, 1)`.
    pub fn check_cover(&self) -> Result<()> {
        let mut at = Rational::zero();
        for c in self.all_cells() {
            if c.lo != at || c.hi < c.lo {
                return Err(Error::Numeric(format!(
                    "cell [{}, {}) does not continue at {}",
                    c.lo, c.hi, at
                )));
            }
            at = c.hi.clone();
        }
        if !at.is_one() {
            return Err(Error::Numeric(format!("cells end at {at}, not 1")));
        }
        Ok(())
    }

    /// Lebesgue measure of `{u : update(u, ctx) = +1}`.
    pub fn plus_measure(&self, ctx: &Context) -> Result<Rational> {
        let mut m = Rational::zero();
        for c in self.all_cells() {
            if c.action.apply(ctx)? == Spin::Plus {
                m += c.len();
            }
        }
        Ok(m)
    }

    /// Thresholds on 53-bit uniform integers; zero-length cells are dropped.
    pub fn compile(&self) -> CompiledPartition {
        let mut thresholds = Vec::new();
        let mut actions = Vec::new();
        for c in self.all_cells() {
            if c.lo == c.hi {
                continue;
            }
            thresholds.push(uniform_threshold(&c.hi));
            actions.push(c.action);
        }
        // Merge neighbouring cells with identical actions.
        let mut t2: Vec<u64> = Vec::new();
        let mut a2: Vec<Action> = Vec::new();
        for (t, a) in thresholds.into_iter().zip(actions) {
            if a2.last() == Some(&a) {
                *t2.last_mut().unwrap() = t;
            } else {
                t2.push(t);
                a2.push(a);
            }
        }
        CompiledPartition {
            thresholds: t2,
            actions: a2,
        }
    }
}

/// Cell lookup table: draw `u` selects the first cell with `u < thresholds[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledPartition {
    pub thresholds: Vec<u64>,
    pub actions: Vec<Action>,
}

impl CompiledPartition {
    #[inline]
    pub fn action_for(&self, u: u64) -> &Action {
        let i = self.thresholds.partition_point(|&t| t <= u);
        &self.actions[i.min(self.actions.len() - 1)]
    }
}

fn base_cells(params: &ModelParams) -> Vec<Cell> {
    let e = params.epsilon.clone();
    vec![
        Cell {
            lo: Rational::zero(),
            hi: e.clone(),
            action: Action::emit(Spin::Minus),
            label: CellLabel::Base { symbol: Spin::Minus },
        },
        Cell {
            lo: e.clone(),
            hi: &e + &e,
            action: Action::emit(Spin::Plus),
            label: CellLabel::Base { symbol: Spin::Plus },
        },
    ]
}

/// Standard partition: base cells, then component cells `I_j` of length
/// `lambda_bar_j` for `j = 1..=K`, then the lumped residual.
pub fn build_partition(spec: &KernelSpec, truncation: u64) -> Result<IntervalPartition> {
    spec.validate()?;
    let (params, k, needed) = match spec {
        KernelSpec::Lower { params, k } | KernelSpec::Upper { params, k } => (params, *k, *k),
        KernelSpec::Mixed { params, k, l } | KernelSpec::MixedPrime { params, k, l } => {
            (params, *k, *l)
        }
        _ => {
            return Err(precondition(format!(
                "{} has no interval partition",
                spec.name()
            )))
        }
    };
    if truncation < needed {
        return Err(param(format!(
            "truncation index {truncation} is below {needed}, the last index with a distinct action"
        )));
    }
    let action_of = |j: u64| -> Result<Action> {
        if j <= k {
            let (offset, window) = params.window(j)?;
            return Ok(Action::Majority {
                component: j,
                offset,
                window,
            });
        }
        let s = match spec {
            KernelSpec::Lower { .. } => Spin::Plus,
            KernelSpec::Upper { .. } => Spin::Minus,
            KernelSpec::Mixed { l, .. } => {
                if j <= *l {
                    Spin::Minus
                } else {
                    Spin::Plus
                }
            }
            KernelSpec::MixedPrime { l, .. } => {
                if j <= *l {
                    Spin::Plus
                } else {
                    Spin::Minus
                }
            }
            _ => unreachable!(),
        };
        Ok(Action::emit(s))
    };
    let mut cells = base_cells(params);
    let mut at = params.lambda_bar(0)?;
    let support = params.weights.support_len().unwrap_or(u64::MAX);
    for j in 1..=truncation.min(support) {
        let hi = &at + params.lambda_bar(j)?;
        cells.push(Cell {
            lo: at.clone(),
            hi: hi.clone(),
            action: action_of(j)?,
            label: CellLabel::Block { j },
        });
        at = hi;
    }
    let residual = if at.is_one() {
        None
    } else {
        Some(Cell {
            lo: at,
            hi: Rational::one(),
            action: action_of(truncation + 1)?,
            label: CellLabel::Blocks {
                from: truncation + 1,
                to: None,
            },
        })
    };
    Ok(IntervalPartition { cells, residual })
}

/// Reordered partition for `q'_{r,k+1}`: components `1..=r` keep their place,
/// the tail `j >= k+2` (emitting `-1`) comes next, and the middle components
/// `r+1..=k+1` (emitting `+1`) are shifted behind it.
///
/// Driving `q_{r,k+1}` with [`build_partition`] and `q'_{r,k+1}` with this
/// partition from the same uniforms orders the two chains.
pub fn build_primed_partition(params: &ModelParams, r: u64, k: u64) -> Result<IntervalPartition> {
    params.validate()?;
    if r >= k + 1 {
        return Err(param(format!("primed partition needs r < k+1, got r={r}, k={k}")));
    }
    let mut cells = base_cells(params);
    let mut at = params.lambda_bar(0)?;
    for j in 1..=r {
        let (offset, window) = params.window(j)?;
        let hi = &at + params.lambda_bar(j)?;
        cells.push(Cell {
            lo: at.clone(),
            hi: hi.clone(),
            action: Action::Majority {
                component: j,
                offset,
                window,
            },
            label: CellLabel::Block { j },
        });
        at = hi;
    }
    let tail = params.lambda_bar_tail(k + 2)?;
    let hi = &at + &tail;
    cells.push(Cell {
        lo: at.clone(),
        hi: hi.clone(),
        action: Action::emit(Spin::Minus),
        label: CellLabel::Blocks { from: k + 2, to: None },
    });
    at = hi;
    for j in r + 1..=k + 1 {
        let hi = &at + params.lambda_bar(j)?;
        cells.push(Cell {
            lo: at.clone(),
            hi: hi.clone(),
            action: Action::emit(Spin::Plus),
            label: CellLabel::Block { j },
        });
        at = hi;
    }
    let p = IntervalPartition {
        cells,
        residual: None,
    };
    p.check_cover()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn lower_one_cells() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let part = build_partition(&KernelSpec::lower(p.clone(), 1), 1).unwrap();
        part.check_cover().unwrap();
        let b: Vec<_> = part.cells.iter().map(|c| (c.lo.clone(), c.hi.clone())).collect();
        assert_eq!(
            b,
            vec![
                (rat(0, 1), rat(1, 4)),
                (rat(1, 4), rat(1, 2)),
                (rat(1, 2), rat(2, 3))
            ]
        );
        let res = part.residual.as_ref().unwrap();
        assert_eq!((res.lo.clone(), res.action), (rat(2, 3), Action::emit(Spin::Plus)));
        let up = build_partition(&KernelSpec::upper(p.clone(), 1), 1).unwrap();
        assert_eq!(up.residual_action(), Some(Action::emit(Spin::Minus)));
        assert!(build_partition(&KernelSpec::mixed(p, 0, 2), 1).is_err());
    }

    #[test]
    fn primed_zero_zero() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let part = build_primed_partition(&p, 0, 0).unwrap();
        let tail = &part.cells[2];
        assert_eq!(tail.lo, rat(1, 2));
        assert_eq!(tail.hi, rat(1, 2) + p.lambda_bar_tail(2).unwrap());
        assert_eq!(part.cells[3].label, CellLabel::Block { j: 1 });
        assert!(build_primed_partition(&p, 1, 0).is_err());
    }

    #[test]
    fn compiled_lookup() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let c = build_partition(&KernelSpec::lower(p, 1), 1).unwrap().compile();
        assert_eq!(*c.action_for(0), Action::emit(Spin::Minus));
        assert_eq!(*c.action_for((1 << 53) - 1), Action::emit(Spin::Plus));
        assert!(matches!(c.action_for(1 << 52), Action::Majority { .. }));
    }
}
