//! Doubling `n` on a fixed seed keeps the point estimate inside the previous band.

use gmeasure::estimation::{estimate_dbar_upper, estimate_marginal, EstimateReport, RunOptions};
use gmeasure::kernels::{KernelSpec, ModelParams};
use gmeasure::validation::random_attractive_table;
use gmeasure::Result;

const N: u64 = 4_000;

fn instances() -> Vec<(String, Box<dyn Fn(&RunOptions) -> Result<EstimateReport>>)> {
    let mut v: Vec<(String, Box<dyn Fn(&RunOptions) -> Result<EstimateReport>>)> = Vec::new();
    for i in 0..10 {
        let spec = KernelSpec::table(random_attractive_table(77, i, 6).unwrap());
        v.push((format!("table {i}"), Box::new(move |o| estimate_marginal(&spec, o))));
    }
    for (orders, k) in [(vec![1, 3, 5], 0), (vec![1, 3, 5], 1), (vec![1, 3, 5], 2), (vec![1, 5], 1), (vec![3, 5], 1)] {
        let p = ModelParams::geometric_quarter(orders);
        let spec = KernelSpec::lower(p.clone(), k);
        v.push((spec.name(), Box::new(move |o| estimate_marginal(&spec, o))));
        let (a, b) = (KernelSpec::lower(p.clone(), k), KernelSpec::upper(p, k));
        v.push((format!("dbar {}", a.name()), Box::new(move |o| estimate_dbar_upper(&a, &b, o))));
    }
    v
}

#[test]
fn doubling_n_stays_inside_previous_band() {
    let cases = instances();
    assert_eq!(cases.len(), 20);
    for (seed, (name, f)) in cases.iter().enumerate() {
        let mut n = N;
        let mut prev = f(&RunOptions::new(n, seed as u64)).unwrap();
        for _ in 0..2 {
            n *= 2;
            let next = f(&RunOptions::new(n, seed as u64)).unwrap();
            assert!(
                prev.band.contains(next.point_estimate),
                "{name}: {} at n = {n} outside [{}, {}]",
                next.point_estimate,
                prev.band.lo,
                prev.band.hi
            );
            prev = next;
        }
    }
}
