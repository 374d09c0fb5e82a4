//! Mixture weights `lambda_j`, `j >= 1`, with exact partial and tail sums.

use num_bigint::BigUint;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bounds::logspace::EXACT_BIT_CAP;
use crate::error::{param, Error, Result};
use crate::rational::{from_biguint, pow, rat, serde_rat, serde_rat_vec, Rational};

/// Geometric continuation `first * ratio^(i-1)` after an explicit head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricTail {
    #[serde(with = "serde_rat")]
    pub first: Rational,
    #[serde(with = "serde_rat")]
    pub ratio: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum WeightFamily {
    /// `lambda_j = scale * ratio^j`.
    Geometric {
        #[serde(with = "serde_rat")]
        ratio: Rational,
        #[serde(with = "serde_rat")]
        scale: Rational,
    },
    /// `lambda_j = (1/2)(2/3)^j`.
    Corollary1,
    /// Blocks of equal weights: block `l` has `b_l` entries of
    /// `(3/4)^(l-1) / (4 b_l)`, `b_1 = 1`, `b_l = 2^((c * (b_1 + ... + b_{l-1}))^2)`.
    Corollary2Blocks { c: u32 },
    /// Explicit head `lambda_1..lambda_K`, optionally continued geometrically.
    ExplicitFinite {
        #[serde(with = "serde_rat_vec")]
        head: Vec<Rational>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<GeometricTail>,
    },
}

/// Location of an index inside the block layout of `Corollary2Blocks`.
struct Block {
    level: u32,
    /// Number of indices before this block.
    start: u64,
    size: BigUint,
    weight: Rational,
}

const THREE_QUARTERS: (i64, i64) = (3, 4);

impl WeightFamily {
    pub fn geometric(ratio: Rational, scale: Rational) -> Self {
        WeightFamily::Geometric { ratio, scale }
    }

    /// Geometric family normalized to total mass one: `lambda_j = ((1-r)/r) r^j`.
    pub fn normalized_geometric(ratio: Rational) -> Self {
        let scale = (Rational::one() - &ratio) / &ratio;
        WeightFamily::Geometric { ratio, scale }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightFamily::Geometric { ratio, scale } => {
                if !(ratio.is_positive() && ratio < &Rational::one()) {
                    return Err(param("geometric ratio must lie in (0, 1)"));
                }
                if !scale.is_positive() {
                    return Err(param("geometric scale must be positive"));
                }
                let total = scale * ratio / (Rational::one() - ratio);
                if !total.is_one() {
                    return Err(param(format!("weights sum to {total}, not 1")));
                }
            }
            WeightFamily::Corollary1 => {}
            WeightFamily::Corollary2Blocks { c } => {
                if *c < 1 {
                    return Err(param("block constant c must be at least 1"));
                }
            }
            WeightFamily::ExplicitFinite { head, tail } => {
                if head.iter().any(|w| !w.is_positive()) {
                    return Err(param("explicit weights must be positive"));
                }
                let mut total: Rational = head.iter().sum();
                if let Some(t) = tail {
                    if !(t.first.is_positive()
                        && t.ratio.is_positive()
                        && t.ratio < Rational::one())
                    {
                        return Err(param("geometric tail needs first > 0 and ratio in (0,1)"));
                    }
                    total += &t.first / (Rational::one() - &t.ratio);
                }
                if !total.is_one() {
                    return Err(param(format!("weights sum to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// Number of positive weights, when finite.
    pub fn support_len(&self) -> Option<u64> {
        match self {
            WeightFamily::ExplicitFinite { head, tail: None } => Some(head.len() as u64),
            _ => None,
        }
    }

    pub fn lambda(&self, j: u64) -> Result<Rational> {
        if j == 0 {
            return Err(param("weights are indexed from 1"));
        }
        match self {
            WeightFamily::Geometric { ratio, scale } => Ok(scale * pow(ratio, j)),
            WeightFamily::Corollary1 => Ok(rat(1, 2) * pow(&rat(2, 3), j)),
            WeightFamily::Corollary2Blocks { c } => Ok(block_of(*c, j)?.weight),
            WeightFamily::ExplicitFinite { head, tail } => {
                let k = head.len() as u64;
                if j <= k {
                    Ok(head[(j - 1) as usize].clone())
                } else if let Some(t) = tail {
                    Ok(&t.first * pow(&t.ratio, j - k - 1))
                } else {
                    Ok(Rational::zero())
                }
            }
        }
    }

    /// `sum_{j >= k} lambda_j`; `tail_sum(0) = tail_sum(1) = 1`.
    pub fn tail_sum(&self, k: u64) -> Result<Rational> {
        if k <= 1 {
            return Ok(Rational::one());
        }
        match self {
            WeightFamily::Geometric { ratio, scale } => {
                Ok(scale * pow(ratio, k) / (Rational::one() - ratio))
            }
            WeightFamily::Corollary1 => {
                let ratio = rat(2, 3);
                Ok(rat(3, 2) * pow(&ratio, k))
            }
            WeightFamily::Corollary2Blocks { c } => {
                let b = block_of(*c, k)?;
                let s = rat(THREE_QUARTERS.0, THREE_QUARTERS.1);
                // Remaining entries of this block, then every later block.
                let remaining = &b.size - BigUint::from(k - b.start - 1);
                Ok(from_biguint(&remaining) * &b.weight + pow(&s, b.level as u64))
            }
            WeightFamily::ExplicitFinite { head, tail } => {
                let n = head.len() as u64;
                let tail_total = |from: u64| -> Rational {
                    // sum over geometric entries i >= from (1-based within the tail)
                    match tail {
                        Some(t) => &t.first * pow(&t.ratio, from - 1) / (Rational::one() - &t.ratio),
                        None => Rational::zero(),
                    }
                };
                if k <= n {
                    let head_part: Rational = head[(k - 1) as usize..].iter().sum();
                    Ok(head_part + tail_total(1))
                } else {
                    Ok(tail_total(k - n))
                }
            }
        }
    }

    /// `sum_{j=a}^{b} lambda_j`, zero when `a > b`.
    pub fn partial_sum(&self, a: u64, b: u64) -> Result<Rational> {
        let a = a.max(1);
        if a > b {
            return Ok(Rational::zero());
        }
        Ok(self.tail_sum(a)? - self.tail_sum(b + 1)?)
    }
}

fn block_of(c: u32, j: u64) -> Result<Block> {
    let s = rat(THREE_QUARTERS.0, THREE_QUARTERS.1);
    let mut start: u64 = 0;
    let mut level: u32 = 1;
    loop {
        let size: BigUint = if level == 1 {
            BigUint::one()
        } else {
            let e = (c as u128) * (start as u128);
            let exp = e.checked_mul(e).filter(|&x| x <= EXACT_BIT_CAP as u128);
            match exp {
                Some(x) => BigUint::one() << (x as usize),
                None => {
                    return Err(Error::NotRepresentable {
                        index: j,
                        reason: format!("weight block {level} has more than 2^{EXACT_BIT_CAP} entries"),
                    })
                }
            }
        };
        let end = BigUint::from(start) + &size;
        if BigUint::from(j) <= end {
            let weight = pow(&s, (level - 1) as u64) * rat(1, 4) / from_biguint(&size);
            return Ok(Block {
                level,
                start,
                size,
                weight,
            });
        }
        start = end.to_u64().ok_or_else(|| Error::NotRepresentable {
            index: j,
            reason: "block boundary exceeds 64-bit indices".into(),
        })?;
        level += 1;
    }
}
