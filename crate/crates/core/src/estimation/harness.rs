//! Replication runner, confidence bands and the report type shared by all estimators.

use serde::Serialize;

use crate::cftp::DEFAULT_SCAN_CAP;
use crate::error::{param, Error, Result};

pub const DEFAULT_LEVEL: f64 = 0.99;

/// Settings shared by every Monte-Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub n: u64,
    pub seed: u64,
    /// Worker threads; `0` means available parallelism.
    pub workers: usize,
    pub level: f64,
    pub cap: u64,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            n: 10_000,
            seed: 0,
            workers: 0,
            level: DEFAULT_LEVEL,
            cap: DEFAULT_SCAN_CAP,
            timing: false,
        }
    }
}

impl RunOptions {
    pub fn new(n: u64, seed: u64) -> Self {
        RunOptions {
            n,
            seed,
            ..Default::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(param("need at least one replication"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(param(format!("confidence level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        1.0 - self.level
    }
}

/// `f(0), ..., f(n-1)` evaluated on a pool of `workers` threads, in index order.
pub fn run_indexed<T, F>(n: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
        Ok(pool.install(|| (0..n).into_par_iter().map(&f).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok((0..n).map(f).collect())
    }
}

/// Hoeffding halfwidth `sqrt(ln(2/delta) / (2n))` for `[0, 1]`-valued outcomes.
pub fn hoeffding_halfwidth(n: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

/// Chebyshev halfwidth `s / sqrt(delta n)` for unbounded outcomes.
pub fn chebyshev_halfwidth(sample_sd: f64, n: u64, delta: f64) -> f64 {
    sample_sd / (delta * n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMethod {
    Hoeffding,
    Chebyshev,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub method: BandMethod,
    pub level: f64,
    pub halfwidth: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// A point estimate over `n` replications with its confidence band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub point_estimate: f64,
    pub n: u64,
    pub failures: u64,
    pub band: Band,
    pub seed: u64,
    pub purpose: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<f64>,
}

impl EstimateReport {
    /// Mean of `[0, 1]`-valued outcomes with a Hoeffding band clipped to `[0, 1]`.
    pub fn probability(quantity: impl Into<String>, values: &[f64], failures: u64, opts: &RunOptions, purpose: u8) -> Result<Self> {
        let n = values.len() as u64;
        if n == 0 {
            return Err(Error::Numeric("every replication overflowed the scan cap".into()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let h = hoeffding_halfwidth(n, opts.delta());
        Ok(EstimateReport {
            quantity: quantity.into(),
            point_estimate: mean,
            n,
            failures,
            band: Band {
                method: BandMethod::Hoeffding,
                level: opts.level,
                halfwidth: h,
                lo: (mean - h).max(0.0),
                hi: (mean + h).min(1.0),
            },
            seed: opts.seed,
            purpose,
            reference: None,
            wall_clock_ms: None,
        })
    }

    /// Mean of nonnegative, possibly unbounded outcomes with a Chebyshev band.
    pub fn mean(quantity: impl Into<String>, values: &[f64], failures: u64, opts: &RunOptions, purpose: u8) -> Result<Self> {
        let n = values.len() as u64;
        if n == 0 {
            return Err(Error::Numeric("every replication overflowed the scan cap".into()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let h = chebyshev_halfwidth(var.sqrt(), n, opts.delta());
        Ok(EstimateReport {
            quantity: quantity.into(),
            point_estimate: mean,
            n,
            failures,
            band: Band {
                method: BandMethod::Chebyshev,
                level: opts.level,
                halfwidth: h,
                lo: (mean - h).max(0.0),
                hi: mean + h,
            },
            seed: opts.seed,
            purpose,
            reference: None,
            wall_clock_ms: None,
        })
    }

    pub fn with_reference(mut self, r: f64) -> Self {
        self.reference = Some(r);
        self
    }

    pub fn csv_header() -> &'static str {
        "quantity,point_estimate,n,failures,band_method,level,halfwidth,lo,hi,seed,purpose,reference"
    }

    pub fn csv_row(&self) -> String {
        let method = match self.band.method {
            BandMethod::Hoeffding => "hoeffding",
            BandMethod::Chebyshev => "chebyshev",
        };
        format!(
            "\"{}\",{},{},{},{},{},{},{},{},{},{},{}",
            self.quantity.replace('"', "\"\""),
            self.point_estimate,
            self.n,
            self.failures,
            method,
            self.band.level,
            self.band.halfwidth,
            self.band.lo,
            self.band.hi,
            self.seed,
            self.purpose,
            self.reference.map(|r| r.to_string()).unwrap_or_default()
        )
    }
}

/// Split per-replication results into successes and a count of scan overflows.
pub fn collect_outcomes<T>(results: Vec<Result<T>>) -> Result<(Vec<T>, u64)> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(Error::ScanOverflow { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((ok, failures))
}

/// Wall clock that is only read when timing is requested, so untimed runs
/// work on targets without a clock.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(Option<std::time::Instant>);

impl Stopwatch {
    pub fn start(opts: &RunOptions) -> Self {
        Stopwatch(opts.timing.then(std::time::Instant::now))
    }

    /// Milliseconds since the start, when timing.
    pub fn elapsed_ms(&self) -> Option<f64> {
        self.0.map(|t| t.elapsed().as_secs_f64() * 1e3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoeffding_width() {
        let h = hoeffding_halfwidth(10_000, 0.01);
        assert!((h - (200f64.ln() / 20_000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn runner_keeps_index_order() {
        for w in [1, 2, 8] {
            let v = run_indexed(1000, w, |i| i * i).unwrap();
            assert!(v.iter().enumerate().all(|(i, &x)| x == (i as u64).pow(2)));
        }
    }

    #[test]
    fn overflows_are_counted() {
        let r: Vec<Result<u8>> = vec![Ok(1), Err(Error::ScanOverflow { cap: 3 }), Ok(0)];
        assert_eq!(collect_outcomes(r).unwrap(), (vec![1, 0], 1));
        let r: Vec<Result<u8>> = vec![Ok(1), Err(Error::Numeric("x".into()))];
        assert!(collect_outcomes(r).is_err());
    }

    #[test]
    fn probability_band_is_clipped() {
        let opts = RunOptions::new(10, 0);
        let r = EstimateReport::probability("p", &[0.0; 10], 0, &opts, 1).unwrap();
        assert_eq!(r.band.lo, 0.0);
        assert!(r.band.hi > 0.0);
    }
}
