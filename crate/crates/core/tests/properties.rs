use gmeasure::bounds::corollaries::{corollary1_verify, corollary2_verify};
use gmeasure::bounds::logspace::{log2_enclosure, LogSpaceValue, Outcome, RatInterval};
use gmeasure::cftp::engine::{coalescence_time, forward_simulate, perfect_sample, regeneration_time, CftpMethod};
use gmeasure::cftp::chain::{Past, UpdateRule};
use gmeasure::cftp::io::{pack_trajectory, unpack_trajectory};
use gmeasure::cftp::rng::{purpose, RandomnessStream};
use gmeasure::exact::coupling::hulse_coupling;
use gmeasure::kernels::partition::build_partition;
use gmeasure::kernels::{kernel_eval, Context, KernelSpec, ModelParams, Spin, WeightFamily, OrderSequence};
use gmeasure::rational::{format_rational, parse_rational, rat};
use gmeasure::validation::random_attractive_table;
use gmeasure::Rational;
use num_traits::One;
use proptest::prelude::*;

fn small_params(eps_num: i64, ratio_num: i64, orders: Vec<u64>) -> ModelParams {
    ModelParams::new(
        rat(eps_num, 40),
        WeightFamily::normalized_geometric(rat(ratio_num, 10)),
        OrderSequence::explicit(orders),
    )
    .unwrap()
}

fn orders() -> impl Strategy<Value = Vec<u64>> {
    prop_oneof![Just(vec![1, 3, 5]), Just(vec![1, 5, 7]), Just(vec![1, 3, 7]), Just(vec![3, 5, 7])]
}

fn spec_strategy() -> impl Strategy<Value = KernelSpec> {
    (1i64..20, 1i64..10, orders(), 0u64..2, 1u64..3, 0u8..4).prop_map(|(e, q, o, k, d, variant)| {
        let p = small_params(e, q, o);
        match variant {
            0 => KernelSpec::lower(p, k + d),
            1 => KernelSpec::upper(p, k + d),
            2 => KernelSpec::mixed(p, k, k + d),
            _ => KernelSpec::mixed_prime(p, k, k + d),
        }
    })
}

fn truncation(spec: &KernelSpec) -> u64 {
    match spec {
        KernelSpec::Lower { k, .. } | KernelSpec::Upper { k, .. } => *k,
        KernelSpec::Mixed { l, .. } | KernelSpec::MixedPrime { l, .. } => *l,
        _ => unreachable!(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_normalized_and_partition_faithful(spec in spec_strategy(), idx in 0usize..128) {
        let m = spec.markov_order().unwrap();
        let ctx = Context::from_index(idx % (1 << m), m);
        let plus = kernel_eval(&spec, Spin::Plus, &ctx).unwrap();
        let minus = kernel_eval(&spec, Spin::Minus, &ctx).unwrap();
        prop_assert_eq!(&plus + &minus, Rational::one());
        let part = build_partition(&spec, truncation(&spec)).unwrap();
        part.check_cover().unwrap();
        prop_assert_eq!(part.plus_measure(&ctx).unwrap(), plus);
    }

    #[test]
    fn lower_kernel_is_attractive(e in 1i64..20, q in 1i64..10, o in orders(), k in 0u64..3, x in 0usize..128, y in 0usize..128) {
        let spec = KernelSpec::lower(small_params(e, q, o), k);
        let m = spec.markov_order().unwrap();
        let n = 1usize << m;
        let (x, y) = (x % n, y % n);
        let (hi, lo) = (x | y, x & y);
        let p_hi = kernel_eval(&spec, Spin::Plus, &Context::from_index(hi, m)).unwrap();
        let p_lo = kernel_eval(&spec, Spin::Plus, &Context::from_index(lo, m)).unwrap();
        prop_assert!(p_hi >= p_lo);
    }

    #[test]
    fn monotone_sandwich_from_extreme_pasts(spec in spec_strategy(), seed in any::<u64>(), len in 1i64..200) {
        let rule = UpdateRule::from_spec(&spec).unwrap();
        let s = RandomnessStream::new(seed, 0, purpose::SIMULATE);
        let up = forward_simulate(&rule, &Past::Constant(Spin::Plus), -len, 0, &s).unwrap();
        let down = forward_simulate(&rule, &Past::Constant(Spin::Minus), -len, 0, &s).unwrap();
        prop_assert!(up.iter().zip(&down).all(|(a, b)| a >= b));
    }

    #[test]
    fn lower_dominates_mixed_on_shared_uniforms(e in 1i64..20, q in 1i64..10, o in orders(), r in 0u64..2, seed in any::<u64>()) {
        let p = small_params(e, q, o);
        let k = r + 1;
        let x = UpdateRule::from_spec(&KernelSpec::lower(p.clone(), k)).unwrap();
        let y = UpdateRule::from_spec(&KernelSpec::mixed(p, r, k)).unwrap();
        let s = RandomnessStream::new(seed, 1, purpose::DBAR);
        for past in [Spin::Plus, Spin::Minus] {
            let a = forward_simulate(&x, &Past::Constant(past), -150, 0, &s).unwrap();
            let b = forward_simulate(&y, &Past::Constant(past), -150, 0, &s).unwrap();
            prop_assert!(a.iter().zip(&b).all(|(a, b)| a >= b));
        }
    }

    #[test]
    fn coalescence_never_exceeds_regeneration(e in 4i64..20, o in orders(), k in 0u64..3, seed in any::<u64>(), rep in 0u64..1000) {
        let p = small_params(e, 5, o);
        let spec = KernelSpec::lower(p.clone(), k);
        let rule = UpdateRule::from_spec(&spec).unwrap();
        let s = RandomnessStream::new(seed, rep, purpose::ETA_THETA);
        let eta = regeneration_time(rule.order(), &p.epsilon, &s, 1 << 24).unwrap();
        let theta = coalescence_time(&rule, &s, 1 << 24).unwrap().unwrap();
        prop_assert!(theta <= eta);
    }

    #[test]
    fn hulse_coupling_reproduces_marginals(seed in any::<u64>(), i in 0u64..50, j in 0u64..50) {
        let a = random_attractive_table(seed, i, 3).unwrap();
        let b = random_attractive_table(seed, j, 3).unwrap();
        let m = a.order().max(b.order());
        let (a, b) = (a.lift(m).unwrap(), b.lift(m).unwrap());
        let c = hulse_coupling(&a, &b).unwrap();
        let n = 1usize << m;
        for y in 0..n {
            for x in 0..n {
                let (pa, pb) = c.marginals(x, y);
                prop_assert_eq!(&pa, &a.plus()[x]);
                prop_assert_eq!(&pb, &b.plus()[y]);
            }
        }
    }

    #[test]
    fn rational_text_round_trip(num in -1_000_000i64..1_000_000, den in 1i64..1_000_000) {
        let r = rat(num, den);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn packed_trajectory_round_trip(start in any::<i64>(), bits in proptest::collection::vec(any::<bool>(), 0..300)) {
        let s: Vec<Spin> = bits.iter().map(|&b| Spin::from_bit(b as u64)).collect();
        prop_assert_eq!(unpack_trajectory(&pack_trajectory(start, &s)).unwrap(), (start, s));
    }
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..1_000_000_000, 1i64..1_000_000_000, 0u32..40).prop_map(|(n, d, s)| rat(n, d) * rat(1i64 << s, 1))
}

fn represent(v: &Rational, how: u8) -> LogSpaceValue {
    match how {
        0 => LogSpaceValue::Exact(v.clone()),
        1 => LogSpaceValue::Enclosure(RatInterval::new(v - rat(1, 1 << 30), v + rat(1, 1 << 30))),
        _ => LogSpaceValue::Log2(log2_enclosure(v, 40)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn log_space_comparison_never_lies(a in positive_rational(), b in positive_rational(), ha in 0u8..3, hb in 0u8..3, same in any::<bool>()) {
        let b = if same { a.clone() } else { b };
        let (x, y) = (represent(&a, ha), represent(&b, hb));
        match x.le(&y, 48) {
            Outcome::Yes => prop_assert!(a <= b),
            Outcome::No => prop_assert!(a > b),
            Outcome::Indeterminate => {}
        }
        if let Some(o) = x.compare(&y, 48) {
            prop_assert_eq!(o, a.cmp(&b));
        }
    }

    #[test]
    fn window_sample_is_restriction_of_larger_window(spec in spec_strategy(), seed in any::<u64>(), a in -20i64..20, len in 0i64..20, pad in 1i64..10) {
        let rule = UpdateRule::from_spec(&spec).unwrap();
        let s = RandomnessStream::new(seed, 3, purpose::SIMULATE);
        let small = perfect_sample(&rule, a, a + len, &s, CftpMethod::MonotoneSandwich, None, 1 << 24).unwrap();
        let big = perfect_sample(&rule, a - pad, a + len + pad, &s, CftpMethod::MonotoneSandwich, None, 1 << 24).unwrap();
        prop_assert_eq!(&small.sample[..], &big.sample[pad as usize..(pad + len + 1) as usize]);
    }
}

#[test]
fn criterium_check_does_not_depend_on_k_max_past_handover() {
    let a = corollary1_verify(577, 3).unwrap();
    let b = corollary1_verify(577, 6).unwrap();
    assert_eq!(a.verdict, b.verdict);
    assert_eq!(a.per_k[..3], b.per_k[..3]);
    assert_eq!(a.tail, b.tail);
    let (la, lb) = (a.ledger.unwrap(), b.ledger.unwrap());
    assert_eq!(la.holds, lb.holds);
    let c = corollary2_verify(7, 3).unwrap();
    let d = corollary2_verify(7, 5).unwrap();
    assert_eq!(c.verdict, d.verdict);
    assert_eq!(c.per_k[..3], d.per_k[..3]);
}
