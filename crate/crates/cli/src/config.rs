//! Experiment configuration: one JSON document per run.
//!
//! ```json
//! { "experiment": "mart-subordination", "seed": 7, "output": "out.jsonl",
//!   "params": { "p": 2.0, "paths": 100000 } }
//! ```

use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use umdlab_core::fourier::MultiplierSymbol;

use crate::defaults as d;

/// Invalid input; the process exits with code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BurkholderCheck,
    MartSubordination,
    MartAdversarial,
    JumpParabolic,
    SymbolEval,
    OpnormSearch,
    HilbertRatio,
    WienerOrthogonal,
    WienerSelfadjoint,
    WienerOnedim,
}

impl Kind {
    pub fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }

    /// Whether the experiment has a `paths` parameter.
    pub fn has_paths(self) -> bool {
        matches!(
            self,
            Self::MartSubordination | Self::JumpParabolic | Self::WienerOrthogonal | Self::WienerSelfadjoint | Self::WienerOnedim
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Kind,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl ExperimentConfig {
    /// Parses a document, applying `--seed` and `--paths` overrides before
    /// validation so a missing seed can come from the command line.
    pub fn parse(text: &str, seed: Option<u64>, paths: Option<usize>) -> anyhow::Result<Self> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| usage(format!("config is not valid JSON: {e}")))?;
        let obj = doc.as_object_mut().ok_or_else(|| usage("config must be a JSON object"))?;
        if let Some(s) = seed {
            obj.insert("seed".into(), s.into());
        }
        let mut cfg: Self = serde_path_to_error::deserialize(doc).map_err(|e| field_error("", e))?;
        if let Some(n) = paths {
            if !cfg.experiment.has_paths() {
                return Err(usage(format!("--paths: experiment {} has no path count", cfg.experiment.name())));
            }
            cfg.params.insert("paths".into(), n.into());
        }
        Ok(cfg)
    }

    pub fn params<T: DeserializeOwned>(&self) -> anyhow::Result<T> {
        serde_path_to_error::deserialize(Value::Object(self.params.clone())).map_err(|e| field_error("params.", e))
    }
}

fn field_error(prefix: &str, e: serde_path_to_error::Error<serde_json::Error>) -> anyhow::Error {
    let path = e.path().to_string();
    if path == "." {
        usage(format!("{}: {}", if prefix.is_empty() { "config" } else { "params" }, e.inner()))
    } else {
        usage(format!("{prefix}{path}: {}", e.inner()))
    }
}

fn p() -> f64 {
    d::P
}
fn p_sub() -> f64 {
    d::P_SUBORDINATION
}
fn p_adv() -> f64 {
    d::P_ADVERSARIAL
}
fn p_jump() -> f64 {
    d::P_JUMP
}
fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurkholderParams {
    #[serde(default = "p")]
    pub p: f64,
    #[serde(default = "burkholder_dim")]
    pub dim: usize,
    #[serde(default = "burkholder_probes")]
    pub probes: usize,
}
fn burkholder_dim() -> usize {
    d::BURKHOLDER_DIM
}
fn burkholder_probes() -> usize {
    d::BURKHOLDER_PROBES
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorKind {
    Tanh,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    Signs,
    Gaussian,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartParams {
    #[serde(default = "p_sub")]
    pub p: f64,
    #[serde(default = "mart_dim")]
    pub dim: usize,
    #[serde(default = "mart_depth")]
    pub depth: usize,
    #[serde(default = "mart_paths")]
    pub paths: usize,
    #[serde(default = "tanh")]
    pub factors: FactorKind,
    #[serde(default = "signs")]
    pub driver: DriverKind,
}
fn mart_dim() -> usize {
    d::MART_DIM
}
fn mart_depth() -> usize {
    d::MART_DEPTH
}
fn mart_paths() -> usize {
    d::MART_PATHS
}
fn tanh() -> FactorKind {
    FactorKind::Tanh
}
fn signs() -> DriverKind {
    DriverKind::Signs
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarialParams {
    #[serde(default = "p_adv")]
    pub p: f64,
    #[serde(default = "one")]
    pub dim: usize,
    #[serde(default = "adv_depth")]
    pub depth: usize,
    #[serde(default = "adv_budget")]
    pub budget: u64,
}
fn adv_depth() -> usize {
    d::ADVERSARIAL_DEPTH
}
fn adv_budget() -> u64 {
    d::ADVERSARIAL_BUDGET
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpParams {
    #[serde(default = "p_jump")]
    pub p: f64,
    #[serde(default = "jump_family")]
    pub family: String,
    #[serde(default = "jump_paths")]
    pub paths: usize,
}
fn jump_family() -> String {
    d::JUMP_FAMILY.into()
}
fn jump_paths() -> usize {
    d::JUMP_PATHS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolEvalParams {
    pub symbol: MultiplierSymbol,
    pub xi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpnormParams {
    pub symbol: MultiplierSymbol,
    #[serde(default = "p")]
    pub p: f64,
    #[serde(default = "opnorm_budget")]
    pub budget: usize,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub half_period: Option<f64>,
}
fn opnorm_budget() -> usize {
    d::OPNORM_BUDGET
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertParams {
    #[serde(default = "p")]
    pub p: f64,
    #[serde(default = "hilbert_budget")]
    pub budget: usize,
    #[serde(default = "hilbert_points")]
    pub n: usize,
}
fn hilbert_budget() -> usize {
    d::HILBERT_BUDGET
}
fn hilbert_points() -> usize {
    d::HILBERT_POINTS
}

/// Shared Wiener parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WienerCommon {
    #[serde(default = "p")]
    pub p: f64,
    #[serde(default = "wiener_k")]
    pub k: usize,
    #[serde(default = "wiener_intervals")]
    pub intervals: usize,
    #[serde(default)]
    pub adapted: bool,
    #[serde(default = "wiener_paths")]
    pub paths: usize,
    #[serde(default = "wiener_steps")]
    pub steps: usize,
    #[serde(default = "wiener_horizon")]
    pub horizon: f64,
}
fn wiener_k() -> usize {
    d::WIENER_K
}
fn wiener_intervals() -> usize {
    d::WIENER_INTERVALS
}
fn wiener_paths() -> usize {
    d::WIENER_PATHS
}
fn wiener_steps() -> usize {
    d::WIENER_STEPS
}
fn wiener_horizon() -> f64 {
    d::WIENER_HORIZON
}
fn wiener_h() -> usize {
    d::WIENER_H
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerOrthogonalParams {
    #[serde(flatten)]
    pub common: WienerCommon,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WienerSelfadjointParams {
    #[serde(flatten)]
    pub common: WienerCommon,
    #[serde(default = "wiener_h")]
    pub h: usize,
    /// Rows of `A`; a random symmetric (or antisymmetric) matrix when absent.
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Report-only experiment with antisymmetric `A`.
    #[serde(default)]
    pub antisymmetric: bool,
}

/// `"tanh"`, `"sign"` or a constant factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorSpec {
    Constant(f64),
    Named(FactorKind),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WienerOnedimParams {
    #[serde(flatten)]
    pub common: WienerCommon,
    #[serde(default = "tanh_spec")]
    pub factor: FactorSpec,
}
fn tanh_spec() -> FactorSpec {
    FactorSpec::Named(FactorKind::Tanh)
}

/// Rejects keys a flattened params struct does not know (serde cannot combine
/// `flatten` with `deny_unknown_fields`).
pub fn only_keys(params: &Map<String, Value>, extra: &[&str]) -> anyhow::Result<()> {
    const COMMON: [&str; 7] = ["p", "k", "intervals", "adapted", "paths", "steps", "horizon"];
    for key in params.keys() {
        if !COMMON.contains(&key.as_str()) && !extra.contains(&key.as_str()) {
            let mut all: Vec<&str> = COMMON.iter().chain(extra).copied().collect();
            all.sort_unstable();
            return Err(usage(format!("params: unknown field `{key}`, expected one of {}", all.join(", "))));
        }
    }
    Ok(())
}
