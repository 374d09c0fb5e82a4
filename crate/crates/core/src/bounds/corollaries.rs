//! The two explicit parameter families and the inductive arguments that
//! carry the criterium to every `k` beyond a finite handover index.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::criterium::{compute_a_k, theorem3_check, threshold_from, Comparison, CriteriumReport, Discrepancy, RFunction, TailReport};
use super::lemmas::weight_gap;
use super::logspace::{ln2_enclosure, ln_enclosure, log2_enclosure, LogSpaceValue, Outcome, RatInterval, DEFAULT_PRECISION};
use crate::error::{param, precondition, Error, Result};
use crate::kernels::{ModelParams, OrderFormula, OrderSequence, WeightFamily};
use crate::rational::{format_rational, from_biguint, int, pow, rat, Rational};

/// First order of the tower family.
pub const COROLLARY1_FIRST: u64 = 217;
/// Default number of directly inspected indices.
pub const DEFAULT_K_MAX: u64 = 3;

/// A symbolic argument covering all `k` from some index on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TailRule {
    /// `m_{k+1} = c^{m_k}` with geometric weights.
    Corollary1 { c: u64 },
    /// `m_j = 2^{c j^2} - 1` with block weights.
    Corollary2 { c: u32 },
}

/// `epsilon = 1/4`, `lambda_j = (1/2)(2/3)^j`, `m_1 = 217`, `m_{j+1} = c^{m_j}`.
pub fn corollary1_params(c: u64) -> Result<ModelParams> {
    if c % 2 == 0 || c < 3 {
        return Err(param(format!("c must be an odd integer >= 3, got {c}")));
    }
    ModelParams::new(rat(1, 4), WeightFamily::Corollary1, OrderSequence::tower(COROLLARY1_FIRST, c))
}

/// `epsilon = 1/4`, block weights with constant `c`, `m_j = 2^{c j^2} - 1`.
pub fn corollary2_params(c: u32) -> Result<ModelParams> {
    if c < 1 {
        return Err(param("c must be at least 1"));
    }
    ModelParams::new(rat(1, 4), WeightFamily::Corollary2Blocks { c }, OrderSequence::square_exponent(c))
}

fn enc(iv: RatInterval) -> LogSpaceValue {
    LogSpaceValue::Enclosure(iv)
}

fn exact(v: Rational) -> LogSpaceValue {
    LogSpaceValue::Exact(v)
}

fn all_yes(steps: &[Comparison]) -> Outcome {
    steps.iter().fold(Outcome::Yes, |acc, s| acc.and(s.outcome))
}

fn require_alpha(alpha: &Rational) -> Result<()> {
    if *alpha != rat(1, 8) {
        return Err(precondition("the registered tail rules are derived for alpha = 1/8"));
    }
    Ok(())
}

impl TailRule {
    pub fn name(&self) -> String {
        match self {
            TailRule::Corollary1 { c } => format!("corollary1(c = {c})"),
            TailRule::Corollary2 { c } => format!("corollary2(c = {c})"),
        }
    }

    pub fn verify(&self, params: &ModelParams, rfun: &RFunction, alpha: &Rational) -> Result<TailReport> {
        require_alpha(alpha)?;
        match *self {
            TailRule::Corollary1 { c } => {
                if *params != corollary1_params(c)? || *rfun != RFunction::Predecessor {
                    return Err(precondition(format!("{} does not match these parameters", self.name())));
                }
                corollary1_tail(params, c)
            }
            TailRule::Corollary2 { c } => {
                if *params != corollary2_params(c)? || *rfun != (RFunction::SqrtLog { c }) {
                    return Err(precondition(format!("{} does not match these parameters", self.name())));
                }
                corollary2_tail(params, c)
            }
        }
    }
}

/// `T(m) = 1 + m 2^m`.
fn t_of(m: u64) -> Rational {
    int(1) + int(m as i64) * pow(&int(2), m)
}

fn corollary1_tail(params: &ModelParams, c: u64) -> Result<TailReport> {
    let w = DEFAULT_PRECISION;
    let m1 = COROLLARY1_FIRST;
    let mut steps = Vec::new();
    let mut info = Vec::new();

    // Closed form of the gap with r(k+1) = k.
    let closed = (1..=4u64).all(|k| {
        weight_gap(params, k, k).ok() == Some(rat(1, 2) * pow(&rat(2, 3), k + 1))
    });
    steps.push(Comparison::fact(
        "gap_k = (1/2)(2/3)^(k+1) > 0 for k >= 1 (identity of the geometric family; exact at k = 1..4)",
        "=",
        "tail(k+2) - lambda_(k+1)".into(),
        "(1/2)(2/3)^(k+1)".into(),
        closed,
    ));

    steps.push(Comparison::fact(
        "m_k >= k + 1 for k >= 1 (m_1 >= 2, and c^m >= m + 1 for c >= 2)",
        ">=",
        format!("m_1 = {m1}, c = {c}"),
        "2".into(),
        m1 >= 2 && c >= 2,
    ));

    // A_k / gap^2 = 128 (9/4)^(k+1) T^2 ln(2^(k+5) T) <= 512 (9/2)^(k+1) T^3
    // reduces to ln y <= y / 4 for y = 2^(k+5) T >= 64, which holds because it
    // holds at 64 and 1/y <= 1/4 beyond.
    let ln64 = ln_enclosure(&int(64), w);
    steps.push(Comparison::le(
        "A_k / gap_k^2 <= 512 (9/2)^(k+1) (1 + m_k 2^m_k)^3, via ln y <= y/4 for y >= 64",
        &enc(ln64),
        &exact(int(16)),
    ));
    let a1 = compute_a_k(params, &RFunction::Predecessor, &rat(1, 8), 1)?;
    let th1 = threshold_from(&a1, &weight_gap(params, 1, 1)?);
    let t1 = t_of(m1);
    info.push(Comparison::le(
        "A_1 / gap_1^2 <= 512 (9/2)^2 (1 + m_1 2^m_1)^3 (direct evaluation at k = 1)",
        &th1,
        &exact(int(512) * rat(81, 4) * &t1 * &t1 * &t1),
    ));

    // (1 + m 2^m) <= 4^m at m_1, and the increment (m + 2) 2^m <= 3 * 4^m keeps it.
    let base = Comparison::exact_le("(1 + m 2^m) <= 4^m at m = m_1", &t1, &pow(&int(4), m1));
    let incr = Comparison::exact_le(
        "increment (m + 2) <= 3 * 2^m at m = m_1 (the ratio grows with m)",
        &int(m1 as i64 + 2),
        &(int(3) * pow(&int(2), m1)),
    );
    let l2 = Comparison {
        name: "(1 + m_k 2^m_k)^3 <= 64^m_k for k >= 1".into(),
        outcome: base.outcome.and(incr.outcome),
        ..base.clone()
    };
    steps.push(l2);
    info.push(base);
    info.push(incr);

    // 512 (9/2)^(k+1) 64^m_k <= b^m_k  <=>  9 + (k+1) log2(9/2) <= m_k log2(b/64).
    let l45 = log2_enclosure(&rat(9, 2), w);
    let lhs1 = l45.scale(&int(2)).add_scalar(&int(9));
    let m2 = match params.orders.get(2)? {
        crate::kernels::Order::Exact(n) => n,
        _ => return Err(Error::Numeric("m_2 should be exact".into())),
    };
    let diff = from_biguint(&m2) - int(m1 as i64);
    let chain = |b: u64, steps: &mut Vec<Comparison>, label: &str| {
        let lb = log2_enclosure(&rat(b as i64, 64), w);
        let base = Comparison::le(
            format!("{label}: base k = 1, 9 + 2 log2(9/2) <= m_1 log2({b}/64)"),
            &enc(lhs1.clone()),
            &enc(lb.scale(&int(m1 as i64))),
        );
        let step = Comparison::le(
            format!("{label}: increment log2(9/2) <= (m_2 - m_1) log2({b}/64), m_(k+1) - m_k nondecreasing"),
            &enc(l45.clone()),
            &enc(lb.scale(&diff)),
        );
        let outcome = base.outcome.and(step.outcome);
        steps.push(base);
        steps.push(step);
        outcome
    };
    let mut published = Vec::new();
    let o577 = chain(577, &mut published, "512 (9/2)^(k+1) 64^m_k <= 577^m_k");
    steps.push(Comparison {
        name: "512 (9/2)^(k+1) 64^m_k <= 577^m_k for k >= 1".into(),
        outcome: o577,
        ..published[0].clone()
    });
    info.extend(published);

    steps.push(Comparison::fact(
        "577^m_k <= c^m_k = m_(k+1) for k >= 1",
        ">=",
        format!("c = {c}"),
        "577".into(),
        c >= 577,
    ));

    let mut sharper = Vec::new();
    let oc = chain(c, &mut sharper, &format!("512 (9/2)^(k+1) 64^m_k <= {c}^m_k"));
    info.push(Comparison {
        name: format!("sharper variant (not part of the rule): 512 (9/2)^(k+1) 64^m_k <= {c}^m_k for k >= 1"),
        outcome: oc,
        ..sharper[0].clone()
    });
    info.extend(sharper);

    Ok(TailReport {
        rule: TailRule::Corollary1 { c }.name(),
        from_k: 1,
        outcome: all_yes(&steps),
        steps,
        informational: info,
    })
}

fn corollary2_tail(params: &ModelParams, c: u32) -> Result<TailReport> {
    let w = DEFAULT_PRECISION;
    let ci = int(c as i64);
    let ln2 = ln2_enclosure(w);
    let mut steps = Vec::new();
    let mut info = Vec::new();
    let rfun = RFunction::SqrtLog { c };

    // gap_k >= (1/8)(3/4)^(l-2) with l <= k+1 the block of index k+1, so
    // gap_k^2 >= 2^-6 (9/16)^(k-1) >= 2^(-ck) iff ck >= 6 + (k-1) log2(16/9).
    let l169 = log2_enclosure(&rat(16, 9), w);
    let g_base = Comparison::fact("gap bound, base k = 1: c >= 6", ">=", format!("c = {c}"), "6".into(), c >= 6);
    let g_step = Comparison::le("gap bound, increment: log2(16/9) <= c", &enc(l169), &exact(ci.clone()));
    steps.push(Comparison {
        name: "gap_k^2 >= 2^(-ck) for k >= 1, from gap_k >= (1/8)(3/4)^(l-2)".into(),
        outcome: g_base.outcome.and(g_step.outcome),
        ..g_base.clone()
    });
    info.push(g_base);
    info.push(g_step);
    for k in 1..=4u64 {
        let r = rfun.eval(k + 1)?;
        let gap = weight_gap(params, r, k)?;
        info.push(Comparison::exact_le(
            format!("direct: (1/8)(3/4)^0 <= gap_{k}"),
            &rat(1, 8),
            &gap,
        ));
        info.push(Comparison::exact_le(
            format!("direct: 2^(-c*{k}) <= gap_{k}^2"),
            &(Rational::one() / pow(&int(2), c as u64 * k)),
            &(&gap * &gap),
        ));
    }

    // m_r <= (k+1)^(1/c) gives (1 + m_r 2^m_r)^2 <= 4 u^2 4^u <= B_k when c >= 2.
    steps.push(Comparison::fact(
        "(1 + m_r 2^m_r)^2 <= B_k = 4 (k+1) 2^(2(k+1)) for k >= 1 (needs c >= 2)",
        ">=",
        format!("c = {c}"),
        "2".into(),
        c >= 2,
    ));

    // A_k <= 32 ln2 B_k (k + 6 + ck^2 + 2^(ck^2)) <= 81 B_k 2^(ck^2) once
    // 224 ln2 x <= (81 - 32 ln2) 2^x for x = ck^2 >= c >= 2.
    let lhs = ln2.scale(&int(224 * c as i64));
    let rhs = ln2.scale(&int(-32)).add_scalar(&int(81)).scale(&pow(&int(2), c as u64));
    let a_base = Comparison::le("224 ln2 c <= (81 - 32 ln2) 2^c", &enc(lhs), &enc(rhs));
    steps.push(Comparison {
        name: "A_k <= 81 B_k 2^(ck^2) for k >= 1".into(),
        outcome: a_base.outcome.and(Outcome::from_bool(c >= 2)),
        ..a_base.clone()
    });
    info.push(a_base);
    let a1 = compute_a_k(params, &rfun, &rat(1, 8), 1)?;
    info.push(Comparison::le(
        "direct: A_1 <= 81 B_1 2^c",
        &a1,
        &exact(int(81 * 128) * pow(&int(2), c as u64)),
    ));

    // log2 B_k = 2 + log2(k+1) + 2(k+1) <= ck: 7 <= c at k = 1, increments <= 3.
    let b_base = Comparison::fact("B_k <= 2^(ck), base k = 1: 7 <= c", ">=", format!("c = {c}"), "7".into(), c >= 7);
    let b_step = Comparison::fact("B_k <= 2^(ck), increment: 3 <= c", ">=", format!("c = {c}"), "3".into(), c >= 3);
    steps.push(Comparison {
        name: "B_k <= 2^(ck) for k >= 1".into(),
        outcome: b_base.outcome.and(b_step.outcome),
        ..b_base.clone()
    });
    info.push(b_base);
    info.push(b_step);
    info.push(Comparison::fact("B_0 <= 2^0 (k = 0 is not covered)", "<=", "16".into(), "1".into(), false));

    // m_(k+1) = 2^(c(k+1)^2) - 1 >= 81 2^(c(k^2+2k)) iff 2^(c(k^2+2k)) (2^c - 81) >= 1.
    let two_c = BigUint::one() << c as usize;
    info.push(Comparison::fact(
        "2^(c(k+1)^2) >= 81 * 2^(c(k^2+2k)), i.e. 2^c >= 81",
        ">=",
        format!("2^c = {two_c}"),
        "81".into(),
        two_c >= BigUint::from(81u32),
    ));
    steps.push(Comparison::fact(
        "m_(k+1) = 2^(c(k+1)^2) - 1 >= 81 * 2^(c(k^2+2k)), i.e. 2^c >= 82",
        ">=",
        format!("2^c = {two_c}"),
        "82".into(),
        two_c >= BigUint::from(82u32),
    ));

    Ok(TailReport {
        rule: TailRule::Corollary2 { c }.name(),
        from_k: 1,
        outcome: all_yes(&steps),
        steps,
        informational: info,
    })
}

/// Full criterium report for the tower family.
pub fn corollary1_verify(c: u64, k_max: u64) -> Result<CriteriumReport> {
    let params = corollary1_params(c)?;
    let alpha = rat(1, 8);
    let mut report = theorem3_check(&params, &RFunction::Predecessor, &alpha, k_max, Some(&TailRule::Corollary1 { c }))?;
    report.family = Some(format!("corollary1 (c = {c})"));
    report.discrepancies.push(corollary1_k0_discrepancy(&params)?);
    Ok(report)
}

/// Full criterium report for the block family.
pub fn corollary2_verify(c: u32, k_max: u64) -> Result<CriteriumReport> {
    let params = corollary2_params(c)?;
    let alpha = rat(1, 8);
    let mut report = theorem3_check(&params, &RFunction::SqrtLog { c }, &alpha, k_max, Some(&TailRule::Corollary2 { c }))?;
    report.family = Some(format!("corollary2 (c = {c})"));
    Ok(report)
}

/// The three candidate values of the `k = 0` threshold: the printed decimal,
/// the printed expression and the direct evaluation.
pub fn corollary1_k0_discrepancy(params: &ModelParams) -> Result<Discrepancy> {
    let w = DEFAULT_PRECISION;
    let a0 = compute_a_k(params, &RFunction::Predecessor, &rat(1, 8), 0)?;
    let gap = weight_gap(params, 0, 0)?;
    let direct = threshold_from(&a0, &gap);
    let printed_expr = ln2_enclosure(w).scale(&(int(320) * rat(9, 4)));
    Ok(Discrepancy {
        item: "threshold for m_1 at k = 0".into(),
        printed: "320 (3/2)^2 ln 2 ~ 216.74".into(),
        evaluated: vec![
            ("printed decimal".into(), "216.74".into()),
            ("320 (3/2)^2 ln 2".into(), LogSpaceValue::Enclosure(printed_expr.clone()).summary()),
            (
                format!("A_0 / gap_0^2 with A_0 = {} and gap_0 = {}", a0.summary(), format_rational(&gap)),
                direct.summary(),
            ),
            ("m_1".into(), COROLLARY1_FIRST.to_string()),
        ],
        note: "the printed decimal matches neither expression; 720 log10(2) = 216.74 suggests a base-10 slip, \
               and only the printed decimal lies below m_1 = 217"
            .into(),
    })
}

/// Whether an order formula belongs to one of the two families.
pub fn family_tail_rule(params: &ModelParams) -> Option<TailRule> {
    match (&params.weights, &params.orders) {
        (WeightFamily::Corollary1, OrderSequence::Formula(OrderFormula::Tower { first, base }))
            if *first == COROLLARY1_FIRST =>
        {
            Some(TailRule::Corollary1 { c: *base })
        }
        (WeightFamily::Corollary2Blocks { c }, OrderSequence::Formula(OrderFormula::SquareExponent { c: c2 }))
            if c == c2 =>
        {
            Some(TailRule::Corollary2 { c: *c })
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::criterium::Verdict;

    fn step<'a>(t: &'a TailReport, needle: &str) -> &'a Comparison {
        t.steps.iter().find(|s| s.name.contains(needle)).expect(needle)
    }

    #[test]
    fn corollary1_chain_outcomes() {
        let r = corollary1_verify(577, 2).unwrap();
        assert_eq!(r.tail.outcome, Outcome::Yes);
        assert_eq!(r.per_k[1].satisfied, Outcome::Yes);
        assert_eq!(r.per_k[2].satisfied, Outcome::Yes);
        // k = 0: 217 < 1440 ln 2
        assert_eq!(r.per_k[0].satisfied, Outcome::No);
        assert_eq!(r.verdict, Verdict::NotCertified);

        let r = corollary1_verify(575, 1).unwrap();
        assert_eq!(step(&r.tail, "577^m_k <= c^m_k").outcome, Outcome::No);
        assert_eq!(step(&r.tail, "64^m_k <= 577^m_k").outcome, Outcome::Yes);

        let r = corollary1_verify(3, 1).unwrap();
        let sharper = r.tail.informational.iter().find(|s| s.name.starts_with("sharper")).unwrap();
        assert_eq!(sharper.outcome, Outcome::No);
        assert!(corollary1_params(4).is_err());
    }

    #[test]
    fn corollary2_chain_outcomes() {
        let r = corollary2_verify(7, 3).unwrap();
        assert_eq!(r.tail.outcome, Outcome::Yes);
        assert!(r.per_k[1..].iter().all(|e| e.satisfied == Outcome::Yes));
        assert_eq!(r.per_k[0].satisfied, Outcome::No);
        let r = corollary2_verify(6, 1).unwrap();
        assert_eq!(step(&r.tail, "2^c >= 82").outcome, Outcome::No);
    }

    #[test]
    fn tail_rule_refuses_other_families() {
        let p = corollary1_params(577).unwrap();
        assert!(TailRule::Corollary1 { c: 579 }.verify(&p, &RFunction::Predecessor, &rat(1, 8)).is_err());
        assert!(theorem3_check(&p, &RFunction::Predecessor, &rat(1, 8), 1, None).is_err());
        assert_eq!(family_tail_rule(&p), Some(TailRule::Corollary1 { c: 577 }));
    }
}
