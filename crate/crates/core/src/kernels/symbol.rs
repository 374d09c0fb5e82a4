use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// A symbol of the binary alphabet `{-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Spin {
    Minus,
    Plus,
}

impl Spin {
    pub fn value(self) -> i8 {
        match self {
            Spin::Minus => -1,
            Spin::Plus => 1,
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Minus => Spin::Plus,
            Spin::Plus => Spin::Minus,
        }
    }

    pub fn from_sign(v: i64) -> Option<Spin> {
        match v.signum() {
            1 => Some(Spin::Plus),
            -1 => Some(Spin::Minus),
            _ => None,
        }
    }

    /// `+1 -> 1`, `-1 -> 0`.
    pub fn bit(self) -> u64 {
        matches!(self, Spin::Plus) as u64
    }

    pub fn from_bit(b: u64) -> Spin {
        if b & 1 == 1 {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }

    pub const BOTH: [Spin; 2] = [Spin::Minus, Spin::Plus];
}

impl TryFrom<i8> for Spin {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, Self::Error> {
        match v {
            1 => Ok(Spin::Plus),
            -1 => Ok(Spin::Minus),
            other => Err(format!("spin must be -1 or +1, got {other}")),
        }
    }
}

impl From<Spin> for i8 {
    fn from(s: Spin) -> i8 {
        s.value()
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spin::Minus => write!(f, "-1"),
            Spin::Plus => write!(f, "+1"),
        }
    }
}

/// A finite past, most recent symbol first: `symbols[0]` is `x_{-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Context {
    symbols: Vec<Spin>,
}

impl Context {
    pub fn new(symbols: Vec<Spin>) -> Self {
        Context { symbols }
    }

    pub fn empty() -> Self {
        Context::default()
    }

    pub fn constant(s: Spin, order: usize) -> Self {
        Context {
            symbols: vec![s; order],
        }
    }

    pub fn from_values(values: &[i8]) -> Result<Self> {
        let symbols = values
            .iter()
            .map(|&v| Spin::try_from(v).map_err(param))
            .collect::<Result<Vec<_>>>()?;
        Ok(Context { symbols })
    }

    /// Decode the low `order` bits of `index`; bit `i` holds `symbols[i]`.
    pub fn from_index(index: usize, order: usize) -> Self {
        let symbols = (0..order).map(|i| Spin::from_bit((index >> i) as u64)).collect();
        Context { symbols }
    }

    pub fn index(&self) -> usize {
        self.symbols
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, s)| acc | ((s.bit() as usize) << i))
    }

    pub fn order(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[Spin] {
        &self.symbols
    }

    /// Sum of the symbols at lags `offset .. offset + m`.
    pub fn window_sum(&self, offset: usize, m: usize) -> i64 {
        self.symbols[offset..offset + m]
            .iter()
            .map(|s| s.value() as i64)
            .sum()
    }

    /// Prepend `a` as the new most recent symbol and keep at most `order` symbols.
    pub fn push(&self, a: Spin, order: usize) -> Context {
        let mut symbols = Vec::with_capacity(order);
        if order > 0 {
            symbols.push(a);
            symbols.extend(self.symbols.iter().take(order - 1).copied());
        }
        Context { symbols }
    }

    pub fn flipped(&self) -> Context {
        Context {
            symbols: self.symbols.iter().map(|s| s.flip()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip_and_push() {
        let ctx = Context::from_values(&[1, -1, 1]).unwrap();
        assert_eq!(ctx.index(), 0b101);
        assert_eq!(Context::from_index(0b101, 3), ctx);
        let pushed = ctx.push(Spin::Minus, 3);
        assert_eq!(pushed, Context::from_values(&[-1, 1, -1]).unwrap());
        assert_eq!(ctx.window_sum(0, 3), 1);
    }

    #[test]
    fn rejects_zero_symbol() {
        assert!(Context::from_values(&[1, 0]).is_err());
        assert!(serde_json::from_str::<Spin>("0").is_err());
        assert_eq!(serde_json::from_str::<Spin>("-1").unwrap(), Spin::Minus);
    }
}
