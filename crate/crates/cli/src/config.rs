//! Experiment configs: one JSON document per invocation, rationals as "num/den".

use gmeasure::bounds::criterium::RFunction;
use gmeasure::bounds::corollaries::TailRule;
use gmeasure::kernels::{KernelSpec, ModelParams};
use gmeasure::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// Configs shipped with the binary, addressable as `@name`.
pub const BUNDLED: &[(&str, &str)] = &[
    ("corollary1", include_str!("../configs/corollary1.json")),
    ("corollary1_c575", include_str!("../configs/corollary1_c575.json")),
    ("corollary2", include_str!("../configs/corollary2.json")),
    ("corollary2_c6", include_str!("../configs/corollary2_c6.json")),
    ("alpha_rejected", include_str!("../configs/alpha_rejected.json")),
    ("simulate_order0", include_str!("../configs/simulate_order0.json")),
    ("simulate_lower2", include_str!("../configs/simulate_lower2.json")),
    ("simulate_overflow", include_str!("../configs/simulate_overflow.json")),
    ("exact_two_state", include_str!("../configs/exact_two_state.json")),
    ("exact_dbar_k2", include_str!("../configs/exact_dbar_k2.json")),
    ("dbar_order0", include_str!("../configs/dbar_order0.json")),
    ("dbar_k2", include_str!("../configs/dbar_k2.json")),
    ("majorant_k1", include_str!("../configs/majorant_k1.json")),
    ("concentration_k1", include_str!("../configs/concentration_k1.json")),
    ("eta_theta_m3", include_str!("../configs/eta_theta_m3.json")),
    ("gen_corollary1", include_str!("../configs/gen_corollary1.json")),
    ("gen_corollary2", include_str!("../configs/gen_corollary2.json")),
    ("probe_uniqueness", include_str!("../configs/probe_uniqueness.json")),
    ("probe_truncation", include_str!("../configs/probe_truncation.json")),
    ("validate_all", include_str!("../configs/validate_all.json")),
];

/// Read `path`, or a bundled config when the argument is `@name`.
pub fn load(arg: &str) -> Result<Value> {
    let text = match arg.strip_prefix('@') {
        Some(name) => BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| Error::Parameter(format!("no bundled config named '{name}'")))?,
        None => std::fs::read_to_string(arg)?,
    };
    let v: Value = serde_json::from_str(&text)?;
    if let Some(s) = v.get("schema_version") {
        if s.as_u64() != Some(SCHEMA_VERSION as u64) {
            return Err(Error::Parameter(format!("unsupported schema_version {s}")));
        }
    }
    Ok(v)
}

/// Deserialize the config (minus the envelope fields) into a command config.
pub fn parse<T: DeserializeOwned>(v: Option<Value>) -> Result<T> {
    let mut v = v.unwrap_or_else(|| Value::Object(Default::default()));
    if let Value::Object(m) = &mut v {
        for key in ["schema_version", "command", "id", "seed", "workers", "description"] {
            m.remove(key);
        }
    }
    serde_json::from_value(v).map_err(|e| Error::Parameter(format!("config: {e}")))
}

fn default_n() -> u64 {
    10_000
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Sandwich,
    Regeneration,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    Csv,
    Packed,
    #[default]
    Both,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub spec: KernelSpec,
    /// Inclusive window `[a, b]`.
    #[serde(default = "default_window")]
    pub window: (i64, i64),
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub replicate: u64,
    #[serde(default)]
    pub cap: Option<u64>,
    #[serde(default)]
    pub format: TrajectoryFormat,
}

fn default_window() -> (i64, i64) {
    (0, 999)
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DbarConfig {
    /// Shared-uniform disagreement of an ordered pair.
    Pair {
        a: KernelSpec,
        b: KernelSpec,
        #[serde(default = "default_n")]
        n: u64,
    },
    /// Direct disagreement of consecutive lower truncations and the regeneration product bound.
    Majorant {
        params: ModelParams,
        k: u64,
        #[serde(default = "default_n")]
        n: u64,
    },
    /// Empirical deviation probability of `Mixed(r, k + 1)` blocks.
    Concentration {
        params: ModelParams,
        r: u64,
        k: u64,
        #[serde(default = "default_n")]
        n: u64,
    },
    /// Regeneration and coalescence times.
    EtaTheta {
        spec: KernelSpec,
        m: usize,
        #[serde(default = "default_tail")]
        tail: u64,
        #[serde(default = "default_n")]
        n: u64,
    },
}

fn default_tail() -> u64 {
    16
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    pub spec: KernelSpec,
    /// Optional dominated partner for the exact d-bar distance.
    #[serde(default)]
    pub versus: Option<KernelSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriumConfig {
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub c: Option<u64>,
    #[serde(default)]
    pub params: Option<ModelParams>,
    #[serde(default)]
    pub r_function: Option<RFunction>,
    #[serde(default)]
    pub tail_rule: Option<TailRule>,
    #[serde(default)]
    pub alpha: Option<String>,
    #[serde(default)]
    pub k_max: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParamsConfig {
    #[serde(default)]
    pub family: Option<String>,
    #[serde(default)]
    pub c: Option<u64>,
    #[serde(default)]
    pub epsilon: Option<String>,
    #[serde(default)]
    pub orders: Option<Vec<u64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub params: Option<ModelParams>,
    #[serde(default)]
    pub spec: Option<KernelSpec>,
    #[serde(default)]
    pub order_cap: Option<usize>,
    pub horizon: u64,
    #[serde(default = "default_n")]
    pub n: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default)]
    pub criteria: Option<Vec<u8>>,
    #[serde(default)]
    pub scale_down: Option<u64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        for (name, _) in BUNDLED {
            let v = load(&format!("@{name}")).unwrap();
            assert!(v.get("command").is_some(), "{name}");
        }
        assert!(load("@missing").is_err());
    }
}
