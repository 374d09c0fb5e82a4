mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gmeasure::{Error, ErrorClass, Result};
use serde_json::{json, Value};

use commands::Globals;

#[derive(Parser, Debug)]
#[command(name = "gmeasure", version, about = "Perfect simulation and non-uniqueness certification for Bramson-Kalikow chains")]
struct Cli {
    #[command(flatten)]
    global: GlobalFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalFlags {
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism); results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for bulk outputs (trajectories, distributions, results.csv).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Config file, or `@name` for a bundled config.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Include wall-clock times in reports.
    #[arg(long, global = true)]
    timing: bool,
    /// Confidence level of the estimator bands.
    #[arg(long, global = true, default_value_t = gmeasure::estimation::DEFAULT_LEVEL)]
    level: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Perfect sample of a finite-order kernel on a window.
    Simulate,
    /// Shared-uniform d-bar estimates and the bounds behind them.
    Dbar {
        #[arg(long)]
        n: Option<u64>,
    },
    /// Stationary law, marginals, entropy and exact d-bar.
    Exact,
    /// Certify the non-uniqueness criterium for a parameter family.
    CheckCriterium {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        c: Option<u64>,
        /// Rational, `num/den` or decimal.
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        k_max: Option<u64>,
    },
    /// Write a model parameter file.
    GenParams {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        c: Option<u64>,
    },
    /// Gap between runs from the all-plus and all-minus pasts.
    ProbeTransition {
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
    },
    /// Run acceptance criteria.
    Validate {
        /// Criterion number; repeatable.
        #[arg(long = "criterion")]
        criteria: Vec<u8>,
        /// Divide all replication counts, for smoke runs.
        #[arg(long)]
        scale_down: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Dbar { .. } => "dbar",
            Command::Exact => "exact",
            Command::CheckCriterium { .. } => "check-criterium",
            Command::GenParams { .. } => "gen-params",
            Command::ProbeTransition { .. } => "probe-transition",
            Command::Validate { .. } => "validate",
        }
    }
}

fn set(v: &mut Option<Value>, key: &str, value: Value) {
    let obj = v.get_or_insert_with(|| json!({}));
    obj[key] = value;
}

fn run(cli: Cli) -> Result<Value> {
    let mut cfg = cli.global.config.as_deref().map(config::load).transpose()?;
    let name = cli.command.name();
    if let Some(c) = cfg.as_ref().and_then(|v| v.get("command")).and_then(Value::as_str) {
        if c != name {
            return Err(Error::Parameter(format!("config is for '{c}', not '{name}'")));
        }
    }
    let from_cfg = |key: &str| cfg.as_ref().and_then(|v| v.get(key)).and_then(Value::as_u64);
    let g = Globals {
        seed: cli.global.seed.or(from_cfg("seed")).unwrap_or(match cli.command {
            Command::Validate { .. } => gmeasure::validation::ValidationOptions::default().seed,
            _ => 0,
        }),
        workers: cli.global.workers.or(from_cfg("workers").map(|w| w as usize)).unwrap_or(0),
        out: cli.global.out.clone(),
        timing: cli.global.timing,
        level: cli.global.level,
        experiment: cfg
            .as_ref()
            .and_then(|v| v.get("id"))
            .and_then(Value::as_str)
            .unwrap_or(name)
            .to_string(),
    };
    log::info!("{name}: seed {} workers {}", g.seed, g.workers);
    match cli.command {
        Command::Simulate => commands::simulate(config::parse(cfg)?, &g),
        Command::Dbar { n } => {
            if let Some(n) = n {
                set(&mut cfg, "n", json!(n));
            }
            commands::dbar(config::parse(cfg)?, &g)
        }
        Command::Exact => commands::exact(config::parse(cfg)?, &g),
        Command::CheckCriterium { family, c, alpha, k_max } => {
            if let Some(f) = family {
                set(&mut cfg, "family", json!(f));
            }
            if let Some(c) = c {
                set(&mut cfg, "c", json!(c));
            }
            if let Some(a) = alpha {
                set(&mut cfg, "alpha", json!(a));
            }
            if let Some(k) = k_max {
                set(&mut cfg, "k_max", json!(k));
            }
            commands::check_criterium(config::parse(cfg)?, &g)
        }
        Command::GenParams { family, c } => {
            if let Some(f) = family {
                set(&mut cfg, "family", json!(f));
            }
            if let Some(c) = c {
                set(&mut cfg, "c", json!(c));
            }
            commands::gen_params(config::parse(cfg)?, &g)
        }
        Command::ProbeTransition { horizon, n } => {
            if let Some(h) = horizon {
                set(&mut cfg, "horizon", json!(h));
            }
            if let Some(n) = n {
                set(&mut cfg, "n", json!(n));
            }
            commands::probe_transition(config::parse(cfg)?, &g)
        }
        Command::Validate { criteria, scale_down } => {
            if !criteria.is_empty() {
                set(&mut cfg, "criteria", json!(criteria));
            }
            if let Some(s) = scale_down {
                set(&mut cfg, "scale_down", json!(s));
            }
            commands::validate(config::parse(cfg)?, &g)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Numeric => 3,
        ErrorClass::Precondition => 4,
    }
}

/// Write the single stdout document; a closed pipe is not an error.
fn emit(v: &Value) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(v).unwrap());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            eprint!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            let doc = json!({ "error": { "class": "config", "kind": "Usage", "message": e.to_string().trim() }, "exit_code": 2 });
            emit(&doc);
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            log::error!("{e}");
            let class = match e.class() {
                ErrorClass::Config => "config",
                ErrorClass::Numeric => "numeric",
                ErrorClass::Precondition => "precondition",
            };
            let mut err = json!({ "class": class, "kind": e.kind(), "message": e.to_string() });
            if let Error::ScanOverflow { cap } = e {
                err["cap"] = json!(cap);
            }
            let doc = json!({ "error": err, "exit_code": code });
            emit(&doc);
            ExitCode::from(code)
        }
    }
}
