//! Browser bindings: perfect samples, exact marginal and d-bar curves, and
//! the phase-transition probe. Every function takes and returns JSON text.

use gmeasure::cftp::engine::{perfect_sample, CftpMethod, DEFAULT_SCAN_CAP};
use gmeasure::cftp::rng::{purpose, RandomnessStream};
use gmeasure::cftp::UpdateRule;
use gmeasure::estimation::{phase_probe_spec, RunOptions};
use gmeasure::exact::dbar::exact_dbar_specs;
use gmeasure::exact::stationary::stationary;
use gmeasure::kernels::{KernelSpec, ModelParams, OrderSequence, WeightFamily};
use gmeasure::rational::parse_rational;
use gmeasure::{Error, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn params(epsilon: &str, orders: &[u32]) -> Result<ModelParams> {
    ModelParams::new(
        parse_rational(epsilon)?,
        WeightFamily::Corollary1,
        OrderSequence::explicit(orders.iter().map(|&m| m as u64).collect()),
    )
}

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn sample(epsilon: &str, orders: &[u32], k: u32, seed: u64, len: u32) -> Result<Value> {
    if len == 0 || len > 100_000 {
        return Err(Error::Parameter("length must lie in 1..=100000".into()));
    }
    let spec = KernelSpec::lower(params(epsilon, orders)?, k as u64);
    let rule = UpdateRule::from_spec(&spec)?;
    let stream = RandomnessStream::new(seed, 0, purpose::SIMULATE);
    let r = perfect_sample(&rule, 0, len as i64 - 1, &stream, CftpMethod::MonotoneSandwich, None, DEFAULT_SCAN_CAP)?;
    let symbols: String = r.sample.iter().map(|s| if s.value() > 0 { '+' } else { '-' }).collect();
    let plus = r.sample.iter().filter(|s| s.value() > 0).count();
    Ok(json!({
        "kernel": spec.name(),
        "symbols": symbols,
        "plus_fraction": plus as f64 / len as f64,
        "coalescence_time": r.coalescence_time,
    }))
}

/// Perfect sample of `Lower(k)` on `[0, len)`.
#[wasm_bindgen]
pub fn simulate(epsilon: &str, orders: &[u32], k: u32, seed: u64, len: u32) -> String {
    respond(sample(epsilon, orders, k, seed, len))
}

fn curve(epsilon: &str, orders: &[u32]) -> Result<Value> {
    let p = params(epsilon, orders)?;
    let mut rows = Vec::new();
    for k in 0..orders.len() as u64 {
        let (lo, hi) = (KernelSpec::lower(p.clone(), k), KernelSpec::upper(p.clone(), k));
        let order = lo.markov_order()?;
        if order > 10 {
            break;
        }
        let d = exact_dbar_specs(&lo, &hi)?;
        let pi = stationary(&lo.finite()?)?;
        rows.push(json!({
            "k": k,
            "order": order,
            "marginal_lower": d.marginal_a,
            "marginal_upper": d.marginal_b,
            "dbar": d.value,
            "dbar_exact": d.value_exact,
            "stationary_residual": pi.residual,
        }));
    }
    Ok(json!({ "epsilon": epsilon, "rows": rows }))
}

/// Exact marginals of `Lower(k)` and `Upper(k)` and their d-bar distance, per `k`.
#[wasm_bindgen]
pub fn exact_curve(epsilon: &str, orders: &[u32]) -> String {
    respond(curve(epsilon, orders))
}

fn probe(epsilon: &str, order: u32, horizon: u32, n: u32, seed: u64) -> Result<Value> {
    let spec = KernelSpec::lower(params(epsilon, &[order])?, 1);
    let p = phase_probe_spec(&spec, horizon as u64, &RunOptions::new(n as u64, seed))?;
    Ok(serde_json::to_value(p)?)
}

/// Gap between runs started from all-plus and all-minus pasts after `horizon` steps.
#[wasm_bindgen]
pub fn phase_probe(epsilon: &str, order: u32, horizon: u32, n: u32, seed: u64) -> String {
    respond(probe(epsilon, order, horizon, n, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parsed(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn simulate_returns_symbols() {
        let v = parsed(simulate("1/4", &[1, 3, 5], 1, 3, 50));
        assert_eq!(v["symbols"].as_str().unwrap().len(), 50);
        assert_eq!(parsed(simulate("1/4", &[1, 3, 5], 1, 3, 50)), v);
    }

    #[test]
    fn curve_starts_at_one_minus_two_epsilon() {
        let v = parsed(exact_curve("1/4", &[1, 3, 5]));
        assert_eq!(v["rows"][0]["dbar_exact"], "1/2");
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(parsed(simulate("3/4", &[1], 0, 0, 10))["error"].is_string());
        assert!(parsed(phase_probe("1/4", 3, 0, 10, 0))["error"].is_string());
    }

    #[test]
    fn probe_has_exact_gap() {
        let v = parsed(phase_probe("1/4", 3, 20, 400, 1));
        assert!(v["exact_gap"].is_number(), "{v}");
    }
}
