//! Monte-Carlo estimators built on perfect samples and shared-uniform couplings.


use serde::Serialize;

use super::harness::{collect_outcomes, run_indexed, Stopwatch, EstimateReport, RunOptions};
use crate::bounds::lemmas::{concentration_rhs, eta_mean_bound, magnetization_lower_bound};
use crate::bounds::logspace::LogSpaceValue;
use crate::cftp::{
    coalescence_time, coupled_perfect_sample, forward_simulate, perfect_sample, purpose, regeneration_time,
    CftpMethod, Past, RandomnessStream, UpdateRule,
};
use crate::error::{param, precondition, Error, Result};
use crate::exact::dbar::check_ordered_pair;
use crate::exact::{stationary, JointKernel};
use crate::kernels::{build_partition, KernelSpec, ModelParams, Spin};
use crate::rational::to_f64;

fn rule_for(spec: &KernelSpec) -> Result<UpdateRule> {
    spec.validate()?;
    UpdateRule::from_spec(spec)
}

fn stamp(mut r: EstimateReport, start: Stopwatch) -> EstimateReport {
    r.wall_clock_ms = start.elapsed_ms();
    r
}

/// One- and two-symbol marginals from perfect samples on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalEstimate {
    pub plus: EstimateReport,
    /// `P(X_0 = a, X_1 = b)` indexed `[a][b]` with `-1 -> 0`, `+1 -> 1`.
    pub pairs: [[EstimateReport; 2]; 2],
}

pub fn estimate_marginals(spec: &KernelSpec, opts: &RunOptions) -> Result<MarginalEstimate> {
    opts.validate()?;
    let start = Stopwatch::start(opts);
    let rule = rule_for(spec)?;
    let results = run_indexed(opts.n, opts.workers, |rep| {
        let s = RandomnessStream::new(opts.seed, rep, purpose::MARGINAL);
        let r = perfect_sample(&rule, 0, 1, &s, CftpMethod::MonotoneSandwich, None, opts.cap)?;
        Ok((r.at(0).bit() as usize, r.at(1).bit() as usize))
    })?;
    let (ok, failures) = collect_outcomes(results)?;
    let plus: Vec<f64> = ok.iter().map(|&(a, _)| a as f64).collect();
    let pair = |a: usize, b: usize| -> Result<EstimateReport> {
        let v: Vec<f64> = ok.iter().map(|&x| (x == (a, b)) as u8 as f64).collect();
        let label = format!("P(x0 = {}, x1 = {})", pm(a), pm(b));
        Ok(stamp(EstimateReport::probability(label, &v, failures, opts, purpose::MARGINAL)?, start))
    };
    Ok(MarginalEstimate {
        plus: stamp(EstimateReport::probability("P(x0 = +1)", &plus, failures, opts, purpose::MARGINAL)?, start),
        pairs: [[pair(0, 0)?, pair(0, 1)?], [pair(1, 0)?, pair(1, 1)?]],
    })
}

fn pm(bit: usize) -> &'static str {
    if bit == 1 {
        "+1"
    } else {
        "-1"
    }
}

pub fn estimate_marginal(spec: &KernelSpec, opts: &RunOptions) -> Result<EstimateReport> {
    Ok(estimate_marginals(spec, opts)?.plus)
}

/// Fraction of replications whose coupled perfect samples of `a` and `b`
/// disagree at time 0; the uniforms are shared within a replication.
pub fn estimate_dbar_upper(a: &KernelSpec, b: &KernelSpec, opts: &RunOptions) -> Result<EstimateReport> {
    opts.validate()?;
    let start = Stopwatch::start(opts);
    let (fa, fb) = (a.finite()?, b.finite()?);
    check_ordered_pair(&fa, &fb)?;
    let rules = [rule_for(a)?, rule_for(b)?];
    let results = run_indexed(opts.n, opts.workers, |rep| {
        let s = RandomnessStream::new(opts.seed, rep, purpose::DBAR);
        let r = coupled_perfect_sample(&rules, 0, 0, &s, opts.cap)?;
        let (x, y) = (r[0].at(0), r[1].at(0));
        if x < y {
            return Err(precondition(format!("replication {rep}: dominated sample exceeds the dominating one")));
        }
        Ok((x != y) as u8 as f64)
    })?;
    let (ok, failures) = collect_outcomes(results)?;
    let label = format!("P({}_0 != {}_0)", a.name(), b.name());
    Ok(stamp(EstimateReport::probability(label, &ok, failures, opts, purpose::DBAR)?, start))
}

/// Regeneration and coalescence statistics with the empirical tail of `theta`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaThetaEstimate {
    pub m: usize,
    pub eta: EstimateReport,
    pub theta: EstimateReport,
    /// `(j, P(theta > j))` for `j = 0..=tail_len`.
    pub theta_tail: Vec<(u64, f64)>,
    pub eta_bound: String,
    pub eta_bound_f64: Option<f64>,
    pub theta_le_eta: bool,
}

pub fn estimate_eta_theta(spec: &KernelSpec, m: usize, tail_len: u64, opts: &RunOptions) -> Result<EtaThetaEstimate> {
    opts.validate()?;
    let start = Stopwatch::start(opts);
    let params = spec.params().ok_or_else(|| precondition("regeneration needs a BK kernel"))?;
    let rule = rule_for(spec)?;
    if m < rule.order() {
        return Err(param(format!("window m = {m} is shorter than the kernel order {}", rule.order())));
    }
    let eps = params.epsilon.clone();
    let results = run_indexed(opts.n, opts.workers, |rep| {
        let s = RandomnessStream::new(opts.seed, rep, purpose::ETA_THETA);
        let eta = regeneration_time(m, &eps, &s, opts.cap)?;
        let theta = coalescence_time(&rule, &s, opts.cap)?.ok_or(Error::ScanOverflow { cap: opts.cap })?;
        if theta > eta {
            return Err(Error::Numeric(format!("replication {rep}: theta = {theta} exceeds eta = {eta}")));
        }
        Ok((eta, theta))
    })?;
    let (ok, failures) = collect_outcomes(results)?;
    let etas: Vec<f64> = ok.iter().map(|&(e, _)| e as f64).collect();
    let thetas: Vec<f64> = ok.iter().map(|&(_, t)| t as f64).collect();
    let n = ok.len().max(1) as f64;
    let theta_tail = (0..=tail_len)
        .map(|j| (j, ok.iter().filter(|&&(_, t)| t > j).count() as f64 / n))
        .collect();
    let bound = eta_mean_bound(&crate::kernels::Order::Exact((m as u64).into()), &eps)?;
    Ok(EtaThetaEstimate {
        m,
        eta: stamp(EstimateReport::mean("E[eta]", &etas, failures, opts, purpose::ETA_THETA)?, start),
        theta: stamp(EstimateReport::mean("E[theta]", &thetas, failures, opts, purpose::ETA_THETA)?, start),
        theta_tail,
        eta_bound: bound.summary(),
        eta_bound_f64: logspace_f64(&bound),
        theta_le_eta: true,
    })
}

fn logspace_f64(v: &LogSpaceValue) -> Option<f64> {
    match v {
        LogSpaceValue::Exact(x) => Some(to_f64(x)),
        LogSpaceValue::Enclosure(iv) => Some(iv.midpoint_f64()),
        LogSpaceValue::Log2(iv) => Some(iv.midpoint_f64().exp2()).filter(|x| x.is_finite()),
    }
}

/// Empirical left side of the concentration inequality against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationEstimate {
    pub r: u64,
    pub k: u64,
    pub block: usize,
    /// `E[Y_0]` used for the deviation event.
    pub magnetization: f64,
    pub magnetization_source: String,
    pub theta_bar: f64,
    pub deviation: EstimateReport,
    pub rhs: f64,
    pub within: bool,
}

/// `P(|mean of Y_1..Y_m - E| >= E/2)` for `Y` the `Mixed(r, k + 1)` chain and
/// `m = m_{k+1}`, over `n` perfect blocks.
pub fn concentration_empirical(params: &ModelParams, r: u64, k: u64, opts: &RunOptions) -> Result<ConcentrationEstimate> {
    opts.validate()?;
    let start = Stopwatch::start(opts);
    let lower = magnetization_lower_bound(params, r, k)?;
    let spec = KernelSpec::mixed(params.clone(), r, k + 1);
    let block = params.orders.get_usize(k + 1)?;
    let (e, source) = match spec.finite().and_then(|f| stationary(&f)) {
        Ok(d) => (2.0 * d.marginal_plus - 1.0, "exact stationary law".to_string()),
        Err(_) => (to_f64(&lower), "magnetization lower bound".to_string()),
    };
    if e <= 0.0 {
        return Err(precondition("the magnetization must be positive"));
    }
    let theta_bar = logspace_f64(&eta_mean_bound(&params.orders.get(r)?, &params.epsilon)?)
        .ok_or_else(|| Error::Numeric("coalescence bound too large for floating point".into()))?;
    let rule = rule_for(&spec)?;
    let results = run_indexed(opts.n, opts.workers, |rep| {
        let s = RandomnessStream::new(opts.seed, rep, purpose::CONCENTRATION);
        let y = perfect_sample(&rule, 1, block as i64, &s, CftpMethod::MonotoneSandwich, None, opts.cap)?;
        let mean = y.sample.iter().map(|v| v.value() as f64).sum::<f64>() / block as f64;
        Ok(((mean - e).abs() >= e / 2.0) as u8 as f64)
    })?;
    let (ok, failures) = collect_outcomes(results)?;
    let deviation = stamp(
        EstimateReport::probability("P(|block mean - E[Y]| >= E[Y]/2)", &ok, failures, opts, purpose::CONCENTRATION)?,
        start,
    );
    let rhs = concentration_rhs(block as f64, e, theta_bar);
    Ok(ConcentrationEstimate {
        r,
        k,
        block,
        magnetization: e,
        magnetization_source: source,
        theta_bar,
        within: deviation.point_estimate <= rhs + deviation.band.halfwidth,
        rhs,
        deviation,
    })
}

/// The direct disagreement frequency between consecutive lower truncations
/// and the regeneration product majorant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorantEstimate {
    pub k: u64,
    pub disagreement: EstimateReport,
    pub eta: EstimateReport,
    pub s0_complement: EstimateReport,
    /// `(mean eta + 1) * P(S_0^c)` at the point estimates.
    pub majorant: f64,
    /// Disagreement lower band edge against the majorant's upper band edge.
    pub holds: bool,
}

/// `P(X^k_0 != X^{k+1}_0)` against `(E[eta_k] + 1) P(S_0^c)`, with
/// `S_0 = {sum_{j = -m_{k+1}}^{-1} X^{k+1}_j > 0}`.
pub fn d2_majorant(params: &ModelParams, k: u64, opts: &RunOptions) -> Result<MajorantEstimate> {
    opts.validate()?;
    let start = Stopwatch::start(opts);
    let a = KernelSpec::lower(params.clone(), k);
    let b = KernelSpec::lower(params.clone(), k + 1);
    let rules = [rule_for(&a)?, rule_for(&b)?];
    let m_k = params.orders.get_usize(k)?;
    let m_next = params.orders.get_usize(k + 1)? as i64;
    let eps = params.epsilon.clone();
    let pairs = run_indexed(opts.n, opts.workers, |rep| {
        let s = RandomnessStream::new(opts.seed, rep, purpose::DBAR);
        let r = coupled_perfect_sample(&rules, 0, 0, &s, opts.cap)?;
        let eta = regeneration_time(m_k, &eps, &RandomnessStream::new(opts.seed, rep, purpose::D2_ETA), opts.cap)?;
        Ok(((r[0].at(0) != r[1].at(0)) as u8 as f64, eta as f64))
    })?;
    let blocks = run_indexed(opts.n, opts.workers, |rep| {
        let s = RandomnessStream::new(opts.seed, rep, purpose::D2_BLOCK);
        let x = perfect_sample(&rules[1], -m_next, -1, &s, CftpMethod::MonotoneSandwich, None, opts.cap)?;
        let sum: i64 = x.sample.iter().map(|v| v.value() as i64).sum();
        Ok((sum <= 0) as u8 as f64)
    })?;
    let (pairs, f1) = collect_outcomes(pairs)?;
    let (blocks, f2) = collect_outcomes(blocks)?;
    let dis: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let etas: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let disagreement = stamp(
        EstimateReport::probability(format!("P(X^{k}_0 != X^{}_0)", k + 1), &dis, f1, opts, purpose::DBAR)?,
        start,
    );
    let eta = stamp(EstimateReport::mean(format!("E[eta_{k}]"), &etas, f1, opts, purpose::D2_ETA)?, start);
    let s0c = stamp(EstimateReport::probability("P(S_0^c)", &blocks, f2, opts, purpose::D2_BLOCK)?, start);
    let majorant = (eta.point_estimate + 1.0) * s0c.point_estimate;
    let holds = disagreement.band.lo <= (eta.band.hi + 1.0) * s0c.band.hi;
    Ok(MajorantEstimate {
        k,
        disagreement,
        eta,
        s0_complement: s0c,
        majorant,
        holds,
    })
}

/// Forward runs from the all-`+1` and all-`-1` pasts on shared uniforms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseProbe {
    pub kernel: String,
    pub order: usize,
    pub horizon: u64,
    /// `P(X^+_h = +1) - P(X^-_h = +1)`.
    pub gap: EstimateReport,
    /// Exact disagreement probability at the horizon from the coupled chain, when small enough.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_gap: Option<f64>,
    pub note: String,
}

const PROBE_NOTE: &str = "the probe concerns the finite-order truncation, not the infinite-order model";

/// Gap probe on the deepest lower truncation whose order is at most `order_cap`.
pub fn phase_probe(params: &ModelParams, order_cap: usize, horizon: u64, opts: &RunOptions) -> Result<PhaseProbe> {
    let m1 = params.orders.get_usize(1)?;
    if order_cap < m1 {
        return Err(precondition(format!("order cap {order_cap} is below m_1 = {m1}")));
    }
    let limit = params.orders.len().unwrap_or(u64::MAX);
    let mut k = 1;
    while k < limit && params.orders.get_usize(k + 1).is_ok_and(|m| m <= order_cap) {
        k += 1;
    }
    if params.weights.support_len().is_some_and(|s| s < k) {
        k = params.weights.support_len().unwrap().max(1);
    }
    phase_probe_spec(&KernelSpec::lower(params.clone(), k), horizon, opts)
}

/// Gap probe for any finite-order kernel.
pub fn phase_probe_spec(spec: &KernelSpec, horizon: u64, opts: &RunOptions) -> Result<PhaseProbe> {
    opts.validate()?;
    if horizon == 0 {
        return Err(param("horizon must be positive"));
    }
    let start = Stopwatch::start(opts);
    let rule = rule_for(spec)?;
    let h = horizon as i64;
    let results = run_indexed(opts.n, opts.workers, |rep| {
        let s = RandomnessStream::new(opts.seed, rep, purpose::PHASE);
        let up = forward_simulate(&rule, &Past::Constant(Spin::Plus), 1, h, &s)?;
        let lo = forward_simulate(&rule, &Past::Constant(Spin::Minus), 1, h, &s)?;
        if up.iter().zip(&lo).any(|(x, y)| x < y) {
            return Err(precondition(format!("replication {rep}: the +1-past run fell below the -1-past run")));
        }
        Ok(((up[h as usize - 1] != lo[h as usize - 1]) as u8) as f64)
    })?;
    let (ok, failures) = collect_outcomes(results)?;
    let gap = stamp(
        EstimateReport::probability("P(X+_h = +1) - P(X-_h = +1)", &ok, failures, opts, purpose::PHASE)?,
        start,
    );
    let exact_gap = exact_probe_gap(spec, horizon as usize);
    Ok(PhaseProbe {
        kernel: spec.name(),
        order: rule.order(),
        horizon,
        gap: match exact_gap {
            Some(g) => gap.with_reference(g),
            None => gap,
        },
        exact_gap,
        note: PROBE_NOTE.into(),
    })
}

/// Coupled two-chain transfer computation of the disagreement at step `horizon`.
pub fn exact_probe_gap(spec: &KernelSpec, horizon: usize) -> Option<f64> {
    let part = match spec {
        KernelSpec::Lower { k, .. } | KernelSpec::Upper { k, .. } => build_partition(spec, *k).ok()?,
        KernelSpec::Mixed { l, .. } | KernelSpec::MixedPrime { l, .. } => build_partition(spec, *l).ok()?,
        KernelSpec::Table { .. } => {
            let f = spec.finite().ok()?;
            return Some(*JointKernel::threshold(&f, &f).ok()?.propagate(Spin::Plus, Spin::Minus, horizon).last()?);
        }
        KernelSpec::FullBk { .. } => return None,
    };
    let j = JointKernel::shared_uniform(&part, &part).ok()?;
    j.propagate(Spin::Plus, Spin::Minus, horizon).last().copied()
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_dbar_specs;
    use crate::kernels::{OrderSequence, WeightFamily};
    use crate::rational::rat;

    fn opts(n: u64) -> RunOptions {
        RunOptions::new(n, 42).with_workers(2)
    }

    #[test]
    fn order_zero_marginal() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let r = estimate_marginal(&KernelSpec::lower(p, 0), &opts(20_000)).unwrap();
        assert!(r.band.contains(0.75), "{r:?}");
    }

    #[test]
    fn two_state_marginal_and_pairs() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let spec = KernelSpec::lower(p, 1);
        let est = estimate_marginals(&spec, &opts(20_000)).unwrap();
        assert!(est.plus.band.contains(0.7));
        let f = spec.finite().unwrap();
        let exact = crate::exact::pair_marginals(&f, &stationary(&f).unwrap());
        for a in 0..2 {
            for b in 0..2 {
                assert!(est.pairs[a][b].band.contains(exact[a][b]));
            }
        }
    }

    #[test]
    fn dbar_estimates() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let same = estimate_dbar_upper(&KernelSpec::lower(p.clone(), 1), &KernelSpec::lower(p.clone(), 1), &opts(2000)).unwrap();
        assert_eq!(same.point_estimate, 0.0);
        let a = KernelSpec::lower(p.clone(), 0);
        let b = KernelSpec::upper(p.clone(), 0);
        assert!(estimate_dbar_upper(&a, &b, &opts(20_000)).unwrap().band.contains(0.5));
        let (a, b) = (KernelSpec::lower(p.clone(), 2), KernelSpec::upper(p, 2));
        let exact = exact_dbar_specs(&a, &b).unwrap().value;
        assert!(estimate_dbar_upper(&a, &b, &opts(20_000)).unwrap().band.contains(exact));
        assert!(estimate_dbar_upper(&b, &a, &opts(10)).is_err());
    }

    #[test]
    fn eta_theta_ordering() {
        let p = ModelParams::geometric_quarter(vec![1]);
        let e = estimate_eta_theta(&KernelSpec::lower(p, 1), 1, 8, &opts(20_000)).unwrap();
        assert!(e.eta.band.contains(1.0), "{:?}", e.eta);
        assert!(e.theta.point_estimate <= e.eta.point_estimate);
        assert_eq!(e.eta_bound_f64, Some(2.0));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let spec = KernelSpec::lower(p, 2);
        let a = estimate_marginals(&spec, &RunOptions::new(3000, 5).with_workers(1)).unwrap();
        let b = estimate_marginals(&spec, &RunOptions::new(3000, 5).with_workers(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn phase_probe_examples() {
        let p = ModelParams::geometric_quarter(vec![1, 3]);
        let zero = phase_probe_spec(&KernelSpec::lower(p.clone(), 0), 5, &opts(500)).unwrap();
        assert_eq!(zero.gap.point_estimate, 0.0);
        let single = ModelParams::new(
            rat(1, 4),
            WeightFamily::ExplicitFinite { head: vec![rat(1, 1)], tail: None },
            OrderSequence::explicit(vec![3]),
        )
        .unwrap();
        let short = phase_probe(&single, 3, 2, &opts(4000)).unwrap();
        let long = phase_probe(&single, 3, 60, &opts(4000)).unwrap();
        assert!(short.gap.band.contains(short.exact_gap.unwrap()));
        assert!(long.exact_gap.unwrap() < short.exact_gap.unwrap());
        assert!(long.gap.band.contains(long.exact_gap.unwrap()));
        assert!(phase_probe(&single, 2, 5, &opts(10)).is_err());
    }

    #[test]
    fn concentration_and_majorant() {
        let p = ModelParams::geometric_quarter(vec![1, 3, 5]);
        let c = concentration_empirical(&p, 0, 0, &opts(4000)).unwrap();
        assert!(c.within, "{c:?}");
        let d = d2_majorant(&p, 0, &opts(4000)).unwrap();
        assert!(d.holds, "{d:?}");
    }
}
