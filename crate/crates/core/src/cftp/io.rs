//! Trajectory dumps.
//!
//! The packed format is a 4-byte magic `GMT1`, the first index as a
//! little-endian `i64`, the symbol count as a little-endian `u64`, then one
//! bit per symbol, least significant bit first, with `+1` stored as 1.

use crate::error::{Error, Result};
use crate::kernels::Spin;

const MAGIC: &[u8; 4] = b"GMT1";

/// `index,symbol` lines with a header.
pub fn trajectory_csv(start: i64, symbols: &[Spin]) -> String {
    let mut out = String::with_capacity(8 * symbols.len() + 16);
    out.push_str("index,symbol\n");
    for (i, s) in symbols.iter().enumerate() {
        out.push_str(&format!("{},{}\n", start + i as i64, s.value()));
    }
    out
}

pub fn pack_trajectory(start: i64, symbols: &[Spin]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + symbols.len().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&start.to_le_bytes());
    out.extend_from_slice(&(symbols.len() as u64).to_le_bytes());
    for chunk in symbols.chunks(8) {
        let byte = chunk
            .iter()
            .enumerate()
            .fold(0u8, |b, (i, s)| b | ((*s == Spin::Plus) as u8) << i);
        out.push(byte);
    }
    out
}

pub fn unpack_trajectory(bytes: &[u8]) -> Result<(i64, Vec<Spin>)> {
    let bad = |why: &str| Error::Parse(format!("packed trajectory: {why}"));
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(bad("missing header"));
    }
    let start = i64::from_le_bytes(bytes[4..12].try_into().unwrap());
    let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body = &bytes[20..];
    if body.len() != len.div_ceil(8) {
        return Err(bad("length does not match the header"));
    }
    let symbols = (0..len)
        .map(|i| Spin::from_bit(((body[i / 8] >> (i % 8)) & 1) as u64))
        .collect();
    Ok((start, symbols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s: Vec<Spin> = (0..19).map(|i| Spin::from_bit((i * 7 % 3 == 0) as u64)).collect();
        let b = pack_trajectory(-4, &s);
        assert_eq!(b.len(), 20 + 3);
        assert_eq!(b[20] & 1, 1);
        assert_eq!(unpack_trajectory(&b).unwrap(), (-4, s));
        assert!(unpack_trajectory(&b[..22]).is_err());
    }

    #[test]
    fn csv_lines() {
        let csv = trajectory_csv(3, &[Spin::Plus, Spin::Minus]);
        assert_eq!(csv, "index,symbol\n3,1\n4,-1\n");
    }
}
