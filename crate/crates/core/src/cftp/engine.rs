//! Forward runs, coalescence and regeneration times, and perfect sampling.

use serde::Serialize;

use super::chain::{base_threshold, Past, UpdateRule};
use super::rng::{RandomnessStream, StreamId};
use crate::error::{param, precondition, Error, Result};
use crate::kernels::Spin;
use crate::Rational;

/// Default cap on backward scans and horizons.
pub const DEFAULT_SCAN_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CftpMethod {
    #[default]
    MonotoneSandwich,
    RegenerationWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CftpResult {
    /// Symbols at `window.0 ..= window.1`.
    pub sample: Vec<Spin>,
    pub window: (i64, i64),
    pub coalescence_time: Option<u64>,
    pub regeneration_time: Option<u64>,
    pub method: CftpMethod,
    pub seed: u64,
    pub stream: StreamId,
}

impl CftpResult {
    pub fn at(&self, t: i64) -> Spin {
        self.sample[(t - self.window.0) as usize]
    }
}

/// Symbols at `from..=to` produced by the rule from `past`, using `U_from..U_to`.
pub fn forward_simulate(
    rule: &UpdateRule,
    past: &Past,
    from: i64,
    to: i64,
    stream: &RandomnessStream,
) -> Result<Vec<Spin>> {
    if to < from {
        return Ok(Vec::new());
    }
    let mut st = rule.new_state(past)?;
    let mut out = Vec::with_capacity((to - from + 1) as usize);
    stream.for_each_forward(from, to, |_, u| out.push(rule.step(&mut st, u)));
    Ok(out)
}

/// Run the `+1` and `-1` chains from `start` to `b`; compare on `[a, b]`.
/// Returns the upper trajectory on `[a, b]` when they agree everywhere.
fn sandwich(
    rule: &UpdateRule,
    stream: &RandomnessStream,
    start: i64,
    a: i64,
    b: i64,
) -> Result<Option<Vec<Spin>>> {
    let mut up = rule.new_state(&Past::Constant(Spin::Plus))?;
    let mut lo = rule.new_state(&Past::Constant(Spin::Minus))?;
    let mut out = Vec::with_capacity((b - a + 1) as usize);
    let mut agree = true;
    let mut violated = false;
    stream.for_each_forward(start, b, |t, u| {
        let x = rule.step(&mut up, u);
        let y = rule.step(&mut lo, u);
        if x < y {
            violated = true;
        }
        if t >= a {
            agree &= x == y;
            out.push(x);
        }
    });
    if violated {
        return Err(precondition(
            "upper chain fell below lower chain: the kernel is not attractive",
        ));
    }
    Ok(agree.then_some(out))
}

/// Minimal `i` such that chains started at `a - i` from both extremal pasts
/// agree on all of `[a, b]`, together with the coalesced block.
pub fn coalesce_window(
    rule: &UpdateRule,
    stream: &RandomnessStream,
    a: i64,
    b: i64,
    cap: u64,
) -> Result<(u64, Vec<Spin>)> {
    if b < a {
        return Err(param("empty window"));
    }
    if rule.order() == 0 {
        let s = forward_simulate(rule, &Past::Constant(Spin::Minus), a, b, stream)?;
        return Ok((0, s));
    }
    // Doubling search; agreement is monotone in i for attractive rules.
    let mut fail: Option<u64> = None;
    let mut i = 0u64;
    let (mut hit, mut block) = loop {
        if let Some(s) = sandwich(rule, stream, a - i as i64, a, b)? {
            break (i, s);
        }
        fail = Some(i);
        if i >= cap {
            return Err(Error::ScanOverflow { cap });
        }
        i = if i == 0 { 1 } else { (i * 2).min(cap) };
    };
    let mut lo = fail;
    while let Some(l) = lo {
        if hit - l <= 1 {
            break;
        }
        let mid = l + (hit - l) / 2;
        match sandwich(rule, stream, a - mid as i64, a, b)? {
            Some(s) => {
                hit = mid;
                block = s;
            }
            None => lo = Some(mid),
        }
    }
    Ok((hit, block))
}

/// Coalescence time of the symbol at time 0, or `None` past the horizon.
pub fn coalescence_time(rule: &UpdateRule, stream: &RandomnessStream, horizon: u64) -> Result<Option<u64>> {
    match coalesce_window(rule, stream, 0, 0, horizon) {
        Ok((t, _)) => Ok(Some(t)),
        Err(Error::ScanOverflow { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `eta = min{ i >= m-1 : U_{at-j} < 2 epsilon for j = i-m+1 ..= i }`.
pub fn regeneration_time_at(
    m: usize,
    epsilon: &Rational,
    stream: &RandomnessStream,
    at: i64,
    cap: u64,
) -> Result<u64> {
    if m == 0 {
        return Ok(0);
    }
    let thr = base_threshold(epsilon);
    let mut run = 0usize;
    let mut eta = None;
    let mut overflow = false;
    stream.scan_backward(at, |j, u| {
        let i = (at - j) as u64;
        if i >= cap {
            overflow = true;
            return false;
        }
        run = if u < thr { run + 1 } else { 0 };
        if run >= m {
            eta = Some(i);
            return false;
        }
        true
    });
    if overflow {
        return Err(Error::ScanOverflow { cap });
    }
    Ok(eta.expect("scan ends with a result"))
}

pub fn regeneration_time(m: usize, epsilon: &Rational, stream: &RandomnessStream, cap: u64) -> Result<u64> {
    regeneration_time_at(m, epsilon, stream, 0, cap)
}

/// Perfect sample of the stationary chain on `[a, b]`.
///
/// `epsilon` is needed only by the regeneration method (base cells `[0, 2 epsilon)`).
pub fn perfect_sample(
    rule: &UpdateRule,
    a: i64,
    b: i64,
    stream: &RandomnessStream,
    method: CftpMethod,
    epsilon: Option<&Rational>,
    cap: u64,
) -> Result<CftpResult> {
    let (sample, theta, eta) = match method {
        CftpMethod::MonotoneSandwich => {
            let (t, s) = coalesce_window(rule, stream, a, b, cap)?;
            (s, Some(t), None)
        }
        CftpMethod::RegenerationWindow => {
            let e = epsilon.ok_or_else(|| precondition("regeneration needs base cells (epsilon)"))?;
            if matches!(rule, UpdateRule::Table { .. }) {
                return Err(precondition("regeneration windows apply to partition rules only"));
            }
            let eta = regeneration_time_at(rule.order(), e, stream, a, cap)?;
            let start = a - eta as i64;
            let full = forward_simulate(rule, &Past::Constant(Spin::Minus), start, b, stream)?;
            (full[eta as usize..].to_vec(), None, Some(eta))
        }
    };
    Ok(CftpResult {
        sample,
        window: (a, b),
        coalescence_time: theta,
        regeneration_time: eta,
        method,
        seed: stream.seed,
        stream: stream.id,
    })
}

/// Independent monotone CFTP for each rule on the same uniforms.
pub fn coupled_perfect_sample(
    rules: &[UpdateRule],
    a: i64,
    b: i64,
    stream: &RandomnessStream,
    cap: u64,
) -> Result<Vec<CftpResult>> {
    rules
        .iter()
        .map(|r| perfect_sample(r, a, b, stream, CftpMethod::MonotoneSandwich, None, cap))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cftp::rng::purpose;
    use crate::kernels::{KernelSpec, ModelParams};
    use crate::rational::rat;

    fn rule(orders: Vec<u64>, k: u64) -> UpdateRule {
        UpdateRule::from_spec(&KernelSpec::lower(ModelParams::geometric_quarter(orders), k)).unwrap()
    }

    #[test]
    fn theta_never_exceeds_eta() {
        let r = rule(vec![3], 1);
        let e = rat(1, 4);
        for rep in 0..300 {
            let s = RandomnessStream::new(7, rep, purpose::ETA_THETA);
            let theta = coalescence_time(&r, &s, 1 << 20).unwrap().unwrap();
            let eta = regeneration_time(3, &e, &s, 1 << 20).unwrap();
            assert!(theta <= eta, "rep {rep}: {theta} > {eta}");
            assert!(eta >= 2);
        }
    }

    #[test]
    fn window_sample_is_consistent_with_subwindows() {
        let r = rule(vec![1, 3], 2);
        for rep in 0..50 {
            let s = RandomnessStream::new(11, rep, purpose::SIMULATE);
            let big = perfect_sample(&r, -5, 5, &s, CftpMethod::MonotoneSandwich, None, 1 << 20).unwrap();
            let small = perfect_sample(&r, -1, 2, &s, CftpMethod::MonotoneSandwich, None, 1 << 20).unwrap();
            for t in -1..=2 {
                assert_eq!(big.at(t), small.at(t));
            }
            let regen = perfect_sample(&r, -1, 2, &s, CftpMethod::RegenerationWindow, Some(&rat(1, 4)), 1 << 20)
                .unwrap();
            // Regeneration and sandwich read the same uniforms: both are the
            // unique coalesced trajectory.
            assert_eq!(regen.sample, small.sample);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let r = rule(vec![41], 1);
        let s = RandomnessStream::new(1, 0, purpose::SIMULATE);
        assert!(matches!(
            regeneration_time(41, &rat(1, 4), &s, 1000),
            Err(Error::ScanOverflow { cap: 1000 })
        ));
        let _ = r;
    }
}
