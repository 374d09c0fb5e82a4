//! One function per subcommand, each returning the JSON document for stdout.

use std::fs;
use std::path::{Path, PathBuf};

use gmeasure::bounds::corollaries::{
    corollary1_k0_discrepancy, corollary1_params, corollary1_verify, corollary2_params, corollary2_verify,
    family_tail_rule, TailRule,
};
use gmeasure::bounds::criterium::{theorem3_check, CriteriumReport, RFunction};
use gmeasure::cftp::io::{pack_trajectory, trajectory_csv};
use gmeasure::cftp::{perfect_sample, purpose, CftpMethod, RandomnessStream, UpdateRule, DEFAULT_SCAN_CAP};
use gmeasure::estimation::{
    concentration_empirical, d2_majorant, estimate_dbar_upper, estimate_eta_theta, phase_probe, phase_probe_spec,
    EstimateReport, RunOptions,
};
use gmeasure::exact::stationary::{distribution_csv, summary};
use gmeasure::exact::{exact_dbar_attractive, exact_dbar_specs, pair_marginals, stationary};
use gmeasure::kernels::{ModelParams, OrderSequence, WeightFamily};
use gmeasure::rational::{parse_rational, rat};
use gmeasure::validation::{run_criterion, ValidationOptions, CRITERIA};
use gmeasure::{Error, Result};
use serde_json::{json, Value};

use crate::config::{
    CriteriumConfig, DbarConfig, ExactConfig, GenParamsConfig, Method, ProbeConfig, SimulateConfig, TrajectoryFormat,
    ValidateConfig,
};

/// Settings common to every subcommand after flag overrides.
#[derive(Debug, Clone)]
pub struct Globals {
    pub seed: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub timing: bool,
    pub level: f64,
    pub experiment: String,
}

impl Globals {
    fn run(&self, n: u64) -> RunOptions {
        RunOptions {
            n,
            seed: self.seed,
            workers: self.workers,
            level: self.level,
            timing: self.timing,
            ..Default::default()
        }
    }

    fn out_dir(&self) -> Result<Option<&Path>> {
        match &self.out {
            Some(p) => {
                fs::create_dir_all(p)?;
                Ok(Some(p.as_path()))
            }
            None => Ok(None),
        }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<Option<Value>> {
        let Some(dir) = self.out_dir()? else { return Ok(None) };
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        log::info!("wrote {}", path.display());
        Ok(Some(json!({ "file": name, "bytes": bytes.len() })))
    }

    /// Insert or replace the rows keyed by `(experiment, seed)` in `results.csv`.
    fn record(&self, reports: &[&EstimateReport]) -> Result<()> {
        let Some(dir) = self.out_dir()? else { return Ok(()) };
        let path = dir.join("results.csv");
        let key = format!("\"{}\",{},", self.experiment.replace('"', "\"\""), self.seed);
        let header = format!("experiment,seed,{}", EstimateReport::csv_header());
        let mut rows: Vec<String> = match fs::read_to_string(&path) {
            Ok(t) => t.lines().skip(1).filter(|l| !l.starts_with(&key)).map(String::from).collect(),
            Err(_) => Vec::new(),
        };
        rows.extend(reports.iter().map(|r| format!("{key}{}", r.csv_row())));
        let mut text = header;
        text.push('\n');
        for r in rows {
            text.push_str(&r);
            text.push('\n');
        }
        fs::write(path, text)?;
        Ok(())
    }
}

pub fn simulate(cfg: SimulateConfig, g: &Globals) -> Result<Value> {
    let (a, b) = cfg.window;
    if b < a {
        return Err(Error::Parameter(format!("empty window [{a}, {b}]")));
    }
    cfg.spec.validate()?;
    let rule = UpdateRule::from_spec(&cfg.spec)?;
    let stream = RandomnessStream::new(g.seed, cfg.replicate, purpose::SIMULATE);
    let (method, eps) = match cfg.method {
        Method::Sandwich => (CftpMethod::MonotoneSandwich, None),
        Method::Regeneration => (CftpMethod::RegenerationWindow, cfg.spec.params().map(|p| &p.epsilon)),
    };
    let r = perfect_sample(&rule, a, b, &stream, method, eps, cfg.cap.unwrap_or(DEFAULT_SCAN_CAP))?;
    let plus = r.sample.iter().filter(|s| s.value() > 0).count();
    let mean = r.sample.iter().map(|s| s.value() as f64).sum::<f64>() / r.sample.len() as f64;
    let mut files = Vec::new();
    if matches!(cfg.format, TrajectoryFormat::Csv | TrajectoryFormat::Both) {
        files.extend(g.write("trajectory.csv", trajectory_csv(a, &r.sample).as_bytes())?);
    }
    if matches!(cfg.format, TrajectoryFormat::Packed | TrajectoryFormat::Both) {
        files.extend(g.write("trajectory.bin", &pack_trajectory(a, &r.sample))?);
    }
    Ok(json!({
        "command": "simulate",
        "kernel": cfg.spec.name(),
        "order": rule.order(),
        "window": [a, b],
        "method": r.method,
        "coalescence_time": r.coalescence_time,
        "regeneration_time": r.regeneration_time,
        "seed": r.seed,
        "stream": r.stream,
        "length": r.sample.len(),
        "plus_fraction": plus as f64 / r.sample.len() as f64,
        "empirical_mean": mean,
        "files": files,
    }))
}

pub fn dbar(cfg: DbarConfig, g: &Globals) -> Result<Value> {
    match cfg {
        DbarConfig::Pair { a, b, n } => {
            let est = estimate_dbar_upper(&a, &b, &g.run(n))?;
            let exact = exact_dbar_specs(&a, &b).ok();
            let est = match &exact {
                Some(e) => est.with_reference(e.value),
                None => est,
            };
            g.record(&[&est])?;
            Ok(json!({
                "command": "dbar", "kind": "pair", "a": a.name(), "b": b.name(),
                "estimate": est, "exact": exact,
                "exact_within_band": exact.as_ref().map(|e| est.band.contains(e.value)),
            }))
        }
        DbarConfig::Majorant { params, k, n } => {
            let m = d2_majorant(&params, k, &g.run(n))?;
            g.record(&[&m.disagreement, &m.eta, &m.s0_complement])?;
            Ok(json!({ "command": "dbar", "kind": "majorant", "result": m }))
        }
        DbarConfig::Concentration { params, r, k, n } => {
            let c = concentration_empirical(&params, r, k, &g.run(n))?;
            g.record(&[&c.deviation])?;
            Ok(json!({ "command": "dbar", "kind": "concentration", "result": c }))
        }
        DbarConfig::EtaTheta { spec, m, tail, n } => {
            let e = estimate_eta_theta(&spec, m, tail, &g.run(n))?;
            g.record(&[&e.eta, &e.theta])?;
            Ok(json!({ "command": "dbar", "kind": "eta_theta", "result": e }))
        }
    }
}

pub fn exact(cfg: ExactConfig, g: &Globals) -> Result<Value> {
    cfg.spec.validate()?;
    let f = cfg.spec.finite()?;
    let dist = stationary(&f)?;
    let pairs = pair_marginals(&f, &dist);
    let files: Vec<Value> = g.write("distribution.csv", distribution_csv(&dist).as_bytes())?.into_iter().collect();
    let dbar = match &cfg.versus {
        Some(v) => Some(exact_dbar_attractive(&f, &v.finite()?)?),
        None => None,
    };
    Ok(json!({
        "command": "exact",
        "kernel": cfg.spec.name(),
        "summary": summary(&f, &dist),
        "pair_marginals": pairs,
        "dbar": dbar,
        "versus": cfg.versus.as_ref().map(|v| v.name()),
        "files": files,
    }))
}

fn parse_alpha(s: &Option<String>) -> Result<Option<gmeasure::Rational>> {
    s.as_deref().map(parse_rational).transpose()
}

pub fn check_criterium(cfg: CriteriumConfig, _g: &Globals) -> Result<Value> {
    let alpha = parse_alpha(&cfg.alpha)?;
    let k_max = cfg.k_max.unwrap_or(3);
    let one_eighth = rat(1, 8);
    let report: CriteriumReport = match (cfg.family.as_deref(), cfg.params) {
        (Some(fam), None) => {
            let c = cfg.c.ok_or_else(|| Error::Parameter(format!("family {fam} needs c")))?;
            let (params, rfun, rule) = match fam {
                "corollary1" => (corollary1_params(c)?, RFunction::Predecessor, TailRule::Corollary1 { c }),
                "corollary2" => {
                    let c = u32::try_from(c).map_err(|_| Error::Parameter("c out of range".into()))?;
                    (corollary2_params(c)?, RFunction::SqrtLog { c }, TailRule::Corollary2 { c })
                }
                other => return Err(Error::Parameter(format!("unknown family '{other}'"))),
            };
            match alpha {
                Some(a) if a != one_eighth => theorem3_check(&params, &rfun, &a, k_max, Some(&rule))?,
                _ => match rule {
                    TailRule::Corollary1 { c } => corollary1_verify(c, k_max)?,
                    TailRule::Corollary2 { c } => corollary2_verify(c, k_max)?,
                },
            }
        }
        (None, Some(params)) => {
            let rfun = cfg.r_function.unwrap_or(RFunction::Predecessor);
            let rule = cfg.tail_rule.or_else(|| family_tail_rule(&params));
            let a = alpha.unwrap_or(one_eighth);
            let mut r = theorem3_check(&params, &rfun, &a, k_max, rule.as_ref())?;
            if matches!(rule, Some(TailRule::Corollary1 { .. })) {
                r.discrepancies.push(corollary1_k0_discrepancy(&params)?);
            }
            r
        }
        _ => return Err(Error::Parameter("give either a family with c, or params".into())),
    };
    eprint!("{}", report.table());
    let mut v = serde_json::to_value(&report)?;
    v["command"] = json!("check-criterium");
    Ok(v)
}

pub fn gen_params(cfg: GenParamsConfig, g: &Globals) -> Result<Value> {
    let params: ModelParams = match cfg.family.as_deref().unwrap_or("geometric_quarter") {
        "corollary1" => corollary1_params(cfg.c.unwrap_or(577))?,
        "corollary2" => corollary2_params(
            u32::try_from(cfg.c.unwrap_or(7)).map_err(|_| Error::Parameter("c out of range".into()))?,
        )?,
        "geometric_quarter" => {
            let eps = match &cfg.epsilon {
                Some(e) => parse_rational(e)?,
                None => rat(1, 4),
            };
            ModelParams::new(eps, WeightFamily::Corollary1, OrderSequence::explicit(cfg.orders.unwrap_or(vec![1, 3, 5])))?
        }
        other => return Err(Error::Parameter(format!("unknown family '{other}'"))),
    };
    let text = serde_json::to_string_pretty(&params)?;
    let files: Vec<Value> = g.write("params.json", text.as_bytes())?.into_iter().collect();
    Ok(json!({ "command": "gen-params", "params": params, "files": files }))
}

pub fn probe_transition(cfg: ProbeConfig, g: &Globals) -> Result<Value> {
    let opts = g.run(cfg.n);
    let p = match (&cfg.params, &cfg.spec) {
        (Some(params), None) => {
            let cap = cfg.order_cap.ok_or_else(|| Error::Parameter("params need order_cap".into()))?;
            phase_probe(params, cap, cfg.horizon, &opts)?
        }
        (None, Some(spec)) => phase_probe_spec(spec, cfg.horizon, &opts)?,
        _ => return Err(Error::Parameter("give either params with order_cap, or spec".into())),
    };
    g.record(&[&p.gap])?;
    Ok(json!({ "command": "probe-transition", "result": p }))
}

pub fn validate(cfg: ValidateConfig, g: &Globals) -> Result<Value> {
    let opts = ValidationOptions {
        seed: g.seed,
        workers: g.workers,
        timing: g.timing,
        scale_down: cfg.scale_down.unwrap_or(1),
    };
    let ids = cfg.criteria.unwrap_or_else(|| CRITERIA.to_vec());
    let mut results = Vec::new();
    for id in ids {
        let r = run_criterion(id, &opts)?;
        eprintln!("{} criterion {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.summary);
        results.push(r);
    }
    let all = results.iter().all(|r| r.passed);
    Ok(json!({ "command": "validate", "seed": g.seed, "all_passed": all, "criteria": results }))
}
