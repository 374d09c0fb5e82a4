//! The non-uniqueness criterium: constants `A_k`, the per-`k` order
//! conditions, the registered tail rule and the d-bar ledger.

use std::fmt::Write as _;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::corollaries::TailRule;
use super::lemmas::{dbar_step_bound, eta_mean_bound, inverse_base, one_plus_scaled_power, weight_gap};
use super::logspace::{
    approx_f64, ln2_enclosure, log2_enclosure, log2_of_interval, LogSpaceValue, Outcome, DEFAULT_PRECISION,
};
use crate::error::{param, precondition, Error, Result};
use crate::kernels::{ModelParams, Order};
use crate::rational::{format_rational, int, rat, Rational};

/// Exact `(1 + m b^m)` factors beyond this many bits are squared in log space.
const EXACT_FACTOR_BITS: u64 = 1 << 16;

/// The index map `r` with `r(k) < k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RFunction {
    /// `r(k) = k - 1`.
    Predecessor,
    /// `r(k) = 0`.
    Zero,
    /// `r(k) = floor(sqrt(log2 k) / c)`.
    SqrtLog { c: u32 },
    /// `r(k) = values[k - 1]`.
    Explicit { values: Vec<u64> },
}

impl RFunction {
    pub fn eval(&self, k: u64) -> Result<u64> {
        if k == 0 {
            return Err(param("r is defined for k >= 1"));
        }
        let r = match self {
            RFunction::Predecessor => k - 1,
            RFunction::Zero => 0,
            RFunction::SqrtLog { c } => {
                // largest r with 2^((c r)^2) <= k
                let mut r = 0u64;
                loop {
                    let e = (*c as u64 * (r + 1)).pow(2);
                    if e >= 64 || k < 1u64 << e {
                        break r;
                    }
                    r += 1;
                }
            }
            RFunction::Explicit { values } => *values.get((k - 1) as usize).ok_or_else(|| {
                Error::NotRepresentable {
                    index: k,
                    reason: format!("r is listed for k <= {}", values.len()),
                }
            })?,
        };
        if r >= k {
            return Err(param(format!("r({k}) = {r} violates r(k) < k")));
        }
        Ok(r)
    }

    pub fn describe(&self) -> String {
        match self {
            RFunction::Predecessor => "r(k) = k - 1".into(),
            RFunction::Zero => "r(k) = 0".into(),
            RFunction::SqrtLog { c } => format!("r(k) = floor(sqrt(log2 k) / {c})"),
            RFunction::Explicit { values } => format!("r listed for k = 1..{}", values.len()),
        }
    }
}

/// One certified (or undecided) comparison with its arithmetic provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub relation: String,
    pub lhs: String,
    pub rhs: String,
    pub representation: String,
    pub rounding: String,
    pub outcome: Outcome,
}

fn rounding_of(a: &LogSpaceValue, b: &LogSpaceValue) -> String {
    if matches!((a, b), (LogSpaceValue::Exact(_), LogSpaceValue::Exact(_))) {
        "exact".into()
    } else {
        format!("outward, {DEFAULT_PRECISION}-bit")
    }
}

impl Comparison {
    pub fn le(name: impl Into<String>, lhs: &LogSpaceValue, rhs: &LogSpaceValue) -> Comparison {
        Comparison {
            name: name.into(),
            relation: "<=".into(),
            lhs: lhs.summary(),
            rhs: rhs.summary(),
            representation: format!("{}/{}", lhs.representation(), rhs.representation()),
            rounding: rounding_of(lhs, rhs),
            outcome: lhs.le(rhs, DEFAULT_PRECISION),
        }
    }

    pub fn lt(name: impl Into<String>, lhs: &LogSpaceValue, rhs: &LogSpaceValue) -> Comparison {
        Comparison {
            outcome: lhs.lt(rhs, DEFAULT_PRECISION),
            relation: "<".into(),
            ..Comparison::le(name, lhs, rhs)
        }
    }

    pub fn exact_le(name: impl Into<String>, lhs: &Rational, rhs: &Rational) -> Comparison {
        Comparison::le(name, &LogSpaceValue::Exact(lhs.clone()), &LogSpaceValue::Exact(rhs.clone()))
    }

    /// A statement decided by an exact integer fact, such as `c >= 577`.
    pub fn fact(name: impl Into<String>, relation: &str, lhs: String, rhs: String, holds: bool) -> Comparison {
        Comparison {
            name: name.into(),
            relation: relation.into(),
            lhs,
            rhs,
            representation: "exact/exact".into(),
            rounding: "exact".into(),
            outcome: Outcome::from_bool(holds),
        }
    }

    /// A comparison whose operands could not be represented at all.
    pub fn undecided(name: impl Into<String>, lhs: String, rhs: String, why: &str) -> Comparison {
        Comparison {
            name: name.into(),
            relation: "<=".into(),
            lhs,
            rhs,
            representation: why.into(),
            rounding: "none".into(),
            outcome: Outcome::Indeterminate,
        }
    }
}

pub fn check_alpha(epsilon: &Rational, alpha: &Rational) -> Result<()> {
    let cap = rat(1, 2) - epsilon;
    if !(alpha.is_positive() && alpha < &cap) {
        return Err(param(format!(
            "alpha must lie in (0, 1/2 - epsilon) = (0, {}), got {}",
            format_rational(&cap),
            format_rational(alpha)
        )));
    }
    Ok(())
}

fn bits(v: &Rational) -> u64 {
    v.numer().bits() + v.denom().bits()
}

/// `A_k = 8 (1-2e)^-2 (1 + m_r (2e)^-m_r)^2 ln(2^(k+2) (1 + m_k (2e)^-m_k) / alpha)`
/// with `r = r(k+1)` and `m_0 = 0` (so `k = 0` gives `8 (1-2e)^-2 ln(4 / alpha)`).
pub fn compute_a_k(params: &ModelParams, rfun: &RFunction, alpha: &Rational, k: u64) -> Result<LogSpaceValue> {
    check_alpha(&params.epsilon, alpha)?;
    let w = DEFAULT_PRECISION;
    let b = inverse_base(&params.epsilon);
    let nf = params.noise_free();
    let lead = int(8) / (&nf * &nf);
    let r = rfun.eval(k + 1)?;
    let t_k = one_plus_scaled_power(&params.orders.get(k)?, &b)?;
    let t_r = one_plus_scaled_power(&params.orders.get(r)?, &b)?;
    let log2_t_k = t_k.log2_enclosure(w).expect("positive factor");
    let arg = log2_t_k
        .add_scalar(&int(k as i64 + 2))
        .add(&log2_enclosure(&(Rational::one() / alpha), w));
    let ln_arg = arg.mul(&ln2_enclosure(w)).round_out(w);
    match &t_r {
        LogSpaceValue::Exact(t) if bits(t) <= EXACT_FACTOR_BITS && bits(&ln_arg.hi) <= 4 * EXACT_FACTOR_BITS => {
            Ok(LogSpaceValue::Enclosure(ln_arg.scale(&(lead * t * t))))
        }
        _ => {
            let l = log2_enclosure(&lead, w)
                .add(&t_r.log2_enclosure(w).expect("positive factor").scale(&int(2)))
                .add(&log2_of_interval(&ln_arg, w));
            Ok(LogSpaceValue::Log2(l))
        }
    }
}

/// `A_k / gap^2`.
pub fn threshold_from(a_k: &LogSpaceValue, gap: &Rational) -> LogSpaceValue {
    let g2 = gap * gap;
    match a_k {
        LogSpaceValue::Exact(v) => LogSpaceValue::Exact(v / g2),
        LogSpaceValue::Enclosure(iv) => LogSpaceValue::Enclosure(iv.scale(&(Rational::one() / g2))),
        LogSpaceValue::Log2(iv) => {
            let lg = log2_enclosure(&g2, DEFAULT_PRECISION);
            LogSpaceValue::Log2(iv.sub(&lg))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    NonUniquenessCertified,
    NotCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KEntry {
    pub k: u64,
    /// `r(k+1)`.
    pub r: u64,
    /// `sum_{j >= k+2} lambda_j - sum_{j=r(k+1)+1}^{k+1} lambda_j`.
    pub gap: Option<String>,
    pub gap_positive: Outcome,
    /// `sum_{j >= k+1} lambda_j - sum_{j=r(k)+1}^{k} lambda_j`, the index form
    /// used inside the proof (`k >= 1`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifted_gap: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shifted_gap_positive: Option<Outcome>,
    pub a_k: String,
    pub a_k_representation: String,
    pub threshold: String,
    pub m_next: String,
    pub condition: Comparison,
    pub satisfied: Outcome,
    /// Bound on `d(P_k, P_{k+1})` entered in the ledger.
    pub step_bound: String,
    pub step_bound_source: String,
    #[serde(skip)]
    pub step_bound_exact: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub rule: String,
    /// First `k` covered by the rule.
    pub from_k: u64,
    pub steps: Vec<Comparison>,
    /// Reported but not part of the rule.
    pub informational: Vec<Comparison>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerReport {
    pub entries: Vec<String>,
    pub tail_majorant: String,
    /// `2 * (sum of entries + tail)`.
    pub lhs: String,
    pub rhs: String,
    pub slack: String,
    pub slack_approx: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub item: String,
    pub printed: String,
    pub evaluated: Vec<(String, String)>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriumReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub epsilon: String,
    pub alpha: String,
    pub r_function: String,
    pub k_max: u64,
    pub per_k: Vec<KEntry>,
    pub tail: TailReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger: Option<LedgerReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ledger_error: Option<String>,
    pub discrepancies: Vec<Discrepancy>,
    pub verdict: Verdict,
    pub reasons: Vec<String>,
}

/// `2 (sum bounds + tail) < rhs`; the doubling accounts for the mirrored
/// sequence of upper truncations.
pub fn dbar_ledger(bounds: &[Rational], tail: Option<&Rational>, rhs: &Rational) -> Result<LedgerReport> {
    if bounds.iter().any(|b| b.is_negative()) || tail.is_some_and(|t| t.is_negative()) {
        return Err(param("ledger bounds must be nonnegative"));
    }
    let tail = tail.ok_or_else(|| precondition("no certified majorant for the tail of the ledger"))?;
    let sum: Rational = bounds.iter().sum::<Rational>() + tail;
    let lhs = int(2) * sum;
    let slack = rhs - &lhs;
    Ok(LedgerReport {
        entries: bounds.iter().map(format_rational).collect(),
        tail_majorant: format_rational(tail),
        lhs: format_rational(&lhs),
        rhs: format_rational(rhs),
        slack_approx: approx_f64(&slack),
        slack: format_rational(&slack),
        holds: slack.is_positive(),
    })
}

fn describe_order(o: &Order) -> String {
    o.summary()
}

fn approx_value(v: &LogSpaceValue) -> Option<f64> {
    match v {
        LogSpaceValue::Exact(x) => Some(approx_f64(x)),
        LogSpaceValue::Enclosure(iv) => Some(iv.midpoint_f64()),
        LogSpaceValue::Log2(iv) => {
            let l = iv.midpoint_f64();
            (l < 1000.0).then(|| l.exp2())
        }
    }
}

fn inspect_k(params: &ModelParams, rfun: &RFunction, alpha: &Rational, k: u64) -> Result<KEntry> {
    let r = rfun.eval(k + 1)?;
    let gap = weight_gap(params, r, k);
    let shifted = if k >= 1 {
        let rk = rfun.eval(k)?;
        Some(
            params
                .weights
                .tail_sum(k + 1)
                .and_then(|t| Ok(t - params.weights.partial_sum(rk + 1, k)?)),
        )
    } else {
        None
    };
    let m_next = params.orders.get(k + 1)?;
    let m_label = format!("m_{}", k + 1);
    let mut entry = KEntry {
        k,
        r,
        gap: None,
        gap_positive: Outcome::Indeterminate,
        shifted_gap: None,
        shifted_gap_positive: None,
        a_k: "not representable".into(),
        a_k_representation: "none".into(),
        threshold: "not representable".into(),
        m_next: describe_order(&m_next),
        condition: Comparison::undecided(format!("A_{k} / gap_{k}^2 <= {m_label}"), "?".into(), describe_order(&m_next), "unrepresentable"),
        satisfied: Outcome::Indeterminate,
        step_bound: "1/1".into(),
        step_bound_source: "trivial".into(),
        step_bound_exact: Rational::one(),
    };
    if let Some(Ok(s)) = &shifted {
        entry.shifted_gap = Some(format_rational(s));
        entry.shifted_gap_positive = Some(Outcome::from_bool(s.is_positive()));
    }
    let gap = match gap {
        Ok(g) => g,
        Err(Error::NotRepresentable { .. }) => return Ok(entry),
        Err(e) => return Err(e),
    };
    entry.gap = Some(format_rational(&gap));
    entry.gap_positive = Outcome::from_bool(gap.is_positive());
    if !gap.is_positive() {
        return Err(precondition(format!(
            "gap at k = {k} is {} (need sum_{{j >= {}}} lambda_j > sum_{{j = {}}}^{{{}}} lambda_j)",
            format_rational(&gap),
            k + 2,
            r + 1,
            k + 1
        )));
    }
    let a_k = match compute_a_k(params, rfun, alpha, k) {
        Ok(a) => a,
        Err(Error::NotRepresentable { .. }) => return Ok(entry),
        Err(e) => return Err(e),
    };
    entry.a_k = a_k.summary();
    entry.a_k_representation = a_k.representation().into();
    let threshold = threshold_from(&a_k, &gap);
    entry.threshold = threshold.summary();
    entry.condition = match m_next.as_logspace() {
        Some(m) => Comparison::le(format!("A_{k} / gap_{k}^2 <= {m_label}"), &threshold, &m),
        None => Comparison::undecided(
            format!("A_{k} / gap_{k}^2 <= {m_label}"),
            threshold.summary(),
            describe_order(&m_next),
            "beyond representable range",
        ),
    };
    entry.satisfied = entry.condition.outcome;
    if entry.satisfied == Outcome::Yes {
        let b = alpha / int(2).pow((k + 1) as i32);
        entry.step_bound = format_rational(&b);
        entry.step_bound_source = format!("alpha / 2^{}", k + 1);
        entry.step_bound_exact = b;
    } else if let (Some(m), Ok(eta), Ok(theta)) = (
        m_next.as_u64(),
        eta_mean_bound(&params.orders.get(k)?, &params.epsilon),
        eta_mean_bound(&params.orders.get(r)?, &params.epsilon),
    ) {
        if let (Some(eta), Some(theta)) = (approx_value(&eta), approx_value(&theta)) {
            let e = approx_f64(&(params.noise_free() * &gap));
            let v = dbar_step_bound(eta, m as f64, e, theta);
            // Round up to a dyadic rational so the ledger stays a valid majorant.
            let scaled = (v * (1u64 << 52) as f64).ceil() / (1u64 << 52) as f64;
            let b = Rational::from_float(scaled.min(1.0)).unwrap_or_else(Rational::one);
            entry.step_bound = format!("{:.6}", approx_f64(&b));
            entry.step_bound_source = "2 (E[eta_k] + 1) exp(-m_(k+1) E^2 / (8 (1 + E[theta])^2))".into();
            entry.step_bound_exact = b;
        }
    }
    Ok(entry)
}

/// Check the criterium directly for `k = 0..=k_max` (and at least up to the
/// tail rule's handover), delegate all larger `k` to the tail rule, and
/// assemble the d-bar ledger.
pub fn theorem3_check(
    params: &ModelParams,
    rfun: &RFunction,
    alpha: &Rational,
    k_max: u64,
    tail_rule: Option<&TailRule>,
) -> Result<CriteriumReport> {
    params.validate()?;
    check_alpha(&params.epsilon, alpha)?;
    let rule = tail_rule.ok_or_else(|| {
        precondition("no tail rule registered for this family; the criterium quantifies over every k")
    })?;
    let tail = rule.verify(params, rfun, alpha)?;
    let last = k_max.max(tail.from_k.saturating_sub(1));
    let mut per_k = (0..=last)
        .map(|k| inspect_k(params, rfun, alpha, k))
        .collect::<Result<Vec<_>>>()?;
    if tail.outcome == Outcome::Yes {
        for e in per_k.iter_mut().filter(|e| e.k >= tail.from_k && e.satisfied == Outcome::Indeterminate) {
            let b = alpha / int(2).pow((e.k + 1) as i32);
            e.step_bound = format_rational(&b);
            e.step_bound_source = format!("alpha / 2^{} (tail rule)", e.k + 1);
            e.step_bound_exact = b;
        }
    }

    let mut reasons = Vec::new();
    for e in &per_k {
        if e.k < tail.from_k && e.satisfied != Outcome::Yes {
            reasons.push(format!(
                "k = {}: condition {} is {:?} ({} vs {})",
                e.k, e.condition.name, e.satisfied, e.condition.lhs, e.condition.rhs
            ));
        }
        if e.k >= tail.from_k && e.satisfied == Outcome::No {
            reasons.push(format!("k = {}: direct check contradicts the tail rule", e.k));
        }
    }
    if tail.outcome != Outcome::Yes {
        for s in tail.steps.iter().filter(|s| s.outcome != Outcome::Yes) {
            reasons.push(format!("tail rule step '{}' is {:?}", s.name, s.outcome));
        }
    }

    let bounds: Vec<Rational> = per_k.iter().map(|e| e.step_bound_exact.clone()).collect();
    let tail_majorant =
        (tail.outcome == Outcome::Yes).then(|| alpha / int(2).pow((last + 1) as i32));
    let (ledger, ledger_error) = match dbar_ledger(&bounds, tail_majorant.as_ref(), &params.noise_free()) {
        Ok(l) => {
            if !l.holds {
                reasons.push(format!("ledger fails: 2 * sum = {} is not below {}", l.lhs, l.rhs));
            }
            (Some(l), None)
        }
        Err(e) => {
            reasons.push(format!("ledger: {e}"));
            (None, Some(e.to_string()))
        }
    };
    let verdict = if reasons.is_empty() {
        Verdict::NonUniquenessCertified
    } else {
        Verdict::NotCertified
    };
    Ok(CriteriumReport {
        family: None,
        epsilon: format_rational(&params.epsilon),
        alpha: format_rational(alpha),
        r_function: rfun.describe(),
        k_max,
        per_k,
        tail,
        ledger,
        ledger_error,
        discrepancies: Vec::new(),
        verdict,
        reasons,
    })
}

impl CriteriumReport {
    /// Plain-text table for terminals.
    pub fn table(&self) -> String {
        let mut s = String::new();
        if let Some(f) = &self.family {
            let _ = writeln!(s, "family: {f}");
        }
        let _ = writeln!(s, "epsilon = {}, alpha = {}, {}", self.epsilon, self.alpha, self.r_function);
        let _ = writeln!(s, "{:>3} {:>4} {:>24} {:>28} {:>28} {:>14}", "k", "r", "A_k", "threshold", "m_(k+1)", "satisfied");
        for e in &self.per_k {
            let _ = writeln!(
                s,
                "{:>3} {:>4} {:>24} {:>28} {:>28} {:>14}",
                e.k,
                e.r,
                truncate(&e.a_k, 24),
                truncate(&e.threshold, 28),
                truncate(&e.m_next, 28),
                format!("{:?}", e.satisfied)
            );
        }
        let _ = writeln!(s, "tail rule {} from k = {}: {:?}", self.tail.rule, self.tail.from_k, self.tail.outcome);
        for c in &self.tail.steps {
            let _ = writeln!(s, "  [{:?}] {}", c.outcome, c.name);
        }
        for c in &self.tail.informational {
            let _ = writeln!(s, "  (info) [{:?}] {}", c.outcome, c.name);
        }
        if let Some(l) = &self.ledger {
            let _ = writeln!(s, "ledger: 2 * sum = {} vs {} (slack {:.6})", short(&l.lhs), l.rhs, l.slack_approx);
        }
        for d in &self.discrepancies {
            let _ = writeln!(s, "discrepancy: {} printed {}", d.item, d.printed);
            for (k, v) in &d.evaluated {
                let _ = writeln!(s, "  {k} = {v}");
            }
        }
        let _ = writeln!(s, "verdict: {:?}", self.verdict);
        for r in &self.reasons {
            let _ = writeln!(s, "  - {r}");
        }
        s
    }
}

fn truncate(s: &str, n: usize) -> String {
    if s.chars().count() <= n {
        s.to_string()
    } else {
        let t: String = s.chars().take(n - 3).collect();
        format!("{t}...")
    }
}

fn short(s: &str) -> String {
    truncate(s, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::logspace::ln2_enclosure;

    #[test]
    fn a0_is_160_ln2() {
        let p = ModelParams::geometric_quarter(vec![217]);
        let a = compute_a_k(&p, &RFunction::Predecessor, &rat(1, 8), 0).unwrap();
        let expected = ln2_enclosure(DEFAULT_PRECISION).scale(&int(160));
        match a {
            LogSpaceValue::Enclosure(iv) => {
                assert!(iv.lo <= expected.hi && expected.lo <= iv.hi);
                assert!(approx_f64(&iv.width()) < 1e-40);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn alpha_range_is_enforced() {
        let p = ModelParams::geometric_quarter(vec![217]);
        assert!(compute_a_k(&p, &RFunction::Predecessor, &rat(3, 10), 0).is_err());
        assert!(compute_a_k(&p, &RFunction::Predecessor, &rat(1, 4), 0).is_err());
    }

    #[test]
    fn r_functions() {
        assert_eq!(RFunction::Predecessor.eval(5).unwrap(), 4);
        let s = RFunction::SqrtLog { c: 1 };
        assert_eq!(s.eval(1).unwrap(), 0);
        assert_eq!(s.eval(2).unwrap(), 1);
        assert_eq!(s.eval(15).unwrap(), 1);
        assert_eq!(s.eval(16).unwrap(), 2);
        assert_eq!(RFunction::SqrtLog { c: 7 }.eval(1000).unwrap(), 0);
        assert!(RFunction::Explicit { values: vec![1] }.eval(1).is_err());
    }

    #[test]
    fn ledger_examples() {
        let alpha = rat(1, 8);
        let bounds: Vec<Rational> = (0..10).map(|k| &alpha / int(2).pow(k + 1)).collect();
        let tail = &alpha / int(2).pow(10);
        let l = dbar_ledger(&bounds, Some(&tail), &rat(1, 2)).unwrap();
        assert_eq!(l.lhs, "1/4");
        assert_eq!(l.slack, "1/4");
        assert!(l.holds);
        let alpha = rat(1, 4);
        let l = dbar_ledger(&[alpha.clone() / int(2)], Some(&(alpha / int(2))), &rat(1, 2)).unwrap();
        assert!(!l.holds);
        assert!(dbar_ledger(&[], Some(&int(0)), &rat(1, 2)).unwrap().holds);
        assert!(dbar_ledger(&[], None, &rat(1, 2)).is_err());
    }
}
