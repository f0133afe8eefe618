//! Experiment configuration.
//!
//! Config files are flat TOML: one `key = value` per line, no tables.
//! Unknown keys are rejected. The full key list lives in the README; in short:
//!
//! ```toml
//! channels = 10            # K
//! horizon_slots = 100000   # T
//! runs = 1000
//! base_seed = 7
//! pu_model = "iid"         # "iid" | "markov"
//! su_policy = "hedge"      # "hedge" | "fixed" | "uniform"
//! attacker = "prola"       # "pola" | "prola" | "uniform" | "fixed" | "none"
//! prola_observations = 1   # m
//! output_path = "results/prola_k10.csv"
//! ```
//!
//! When no PU vectors are given, the reference 10-channel vectors are used,
//! truncated for `K < 10` and extended with seeded uniform draws for `K > 10`.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Channel, EnvError, PuModel};
use crate::learners::{
    hedge_default_eta, prola_default_params, LearnerError, PolaParams, ProlaParams,
};
use crate::metrics::{log_checkpoints, DEFAULT_CHECKPOINTS};

/// Idle probabilities of the reference i.i.d. scenario.
pub const DEFAULT_IDLE_PROB: [f64; 10] =
    [0.85, 0.85, 0.38, 0.51, 0.21, 0.13, 0.87, 0.7, 0.32, 0.95];
/// Busy->idle transition probabilities of the reference Markov scenario.
pub const DEFAULT_P01: [f64; 10] = [0.76, 0.06, 0.3, 0.24, 0.1, 0.1, 0.01, 0.95, 0.94, 0.55];
/// Idle->busy transition probabilities of the reference Markov scenario.
pub const DEFAULT_P10: [f64; 10] = [0.14, 0.43, 0.23, 0.69, 0.22, 0.59, 0.21, 0.58, 0.34, 0.73];
/// Initial idle probabilities of the reference Markov scenario.
pub const DEFAULT_P1: [f64; 10] = [0.53, 0.18, 0.88, 0.66, 0.23, 0.87, 0.48, 0.44, 0.45, 0.88];

pub const DEFAULT_RUNS: usize = 1000;
pub const DEFAULT_LOWER_BOUND_CONSTANT: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid PU model: {0}")]
    Pu(#[from] EnvError),
    #[error("attacker parameters rejected: {0}")]
    Learner(#[from] LearnerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PuKind {
    Iid,
    Markov,
}

/// The file as written, before defaults are filled in and parameters checked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub channels: usize,
    pub horizon_slots: u64,
    pub runs: Option<usize>,
    pub base_seed: Option<u64>,
    pub threads: Option<usize>,
    pub pu_model: Option<PuKind>,
    pub pu_idle_prob: Option<Vec<f64>>,
    pub pu_p01: Option<Vec<f64>>,
    pub pu_p10: Option<Vec<f64>>,
    pub pu_p1: Option<Vec<f64>>,
    pub su_policy: Option<String>,
    pub su_channel: Option<Channel>,
    pub su_eta: Option<f64>,
    pub attacker: Option<String>,
    pub attacker_channel: Option<Channel>,
    pub prola_gamma: Option<f64>,
    pub prola_observations: Option<usize>,
    pub eta_override: Option<f64>,
    pub checkpoints: Option<Vec<u64>>,
    pub output_path: Option<PathBuf>,
    pub lower_bound_constant: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Minimal file: PROLA against Hedge on the reference i.i.d. scenario.
    pub fn new(channels: usize, horizon_slots: u64) -> Self {
        Self {
            channels,
            horizon_slots,
            runs: None,
            base_seed: None,
            threads: None,
            pu_model: None,
            pu_idle_prob: None,
            pu_p01: None,
            pu_p10: None,
            pu_p1: None,
            su_policy: None,
            su_channel: None,
            su_eta: None,
            attacker: None,
            attacker_channel: None,
            prola_gamma: None,
            prola_observations: None,
            eta_override: None,
            checkpoints: None,
            output_path: None,
            lower_bound_constant: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuPolicy {
    Hedge { eta: f64 },
    FixedChannel { channel: Channel },
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackerSpec {
    Pola { eta: f64 },
    Prola { gamma: f64, eta: f64, m: usize },
    UniformRandom,
    FixedChannel { channel: Channel },
    None,
}

/// A fully resolved, validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub channels: usize,
    pub horizon: u64,
    pub runs: usize,
    pub base_seed: u64,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub pu: PuModel,
    pub su_policy: SuPolicy,
    pub attacker: AttackerSpec,
    pub checkpoints: Vec<u64>,
    pub output_path: PathBuf,
    pub lower_bound_constant: f64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_file(&ConfigFile::load(path)?)
    }

    pub fn from_file(file: &ConfigFile) -> Result<Self, ConfigError> {
        let k = file.channels;
        let horizon = file.horizon_slots;
        if k < 2 {
            return Err(EnvError::TooFewChannels(k).into());
        }
        if horizon == 0 {
            return Err(invalid("horizon_slots must be at least 1"));
        }
        let runs = file.runs.unwrap_or(DEFAULT_RUNS);
        if runs == 0 {
            return Err(invalid("runs must be at least 1"));
        }
        if file.threads == Some(0) {
            return Err(invalid(
                "threads must be at least 1 (omit it to use every core)",
            ));
        }

        let pu = resolve_pu(file)?.validate(k)?;
        let su_policy = resolve_su(file)?;
        let attacker = resolve_attacker(file)?;

        let checkpoints = match &file.checkpoints {
            Some(c) => c.clone(),
            None => log_checkpoints(horizon, DEFAULT_CHECKPOINTS),
        };
        if checkpoints.is_empty() {
            return Err(invalid("checkpoints must not be empty"));
        }
        if checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "checkpoints must be strictly ascending slot indices >= 1",
            ));
        }
        if checkpoints.last() != Some(&horizon) {
            return Err(invalid("the last checkpoint must equal horizon_slots"));
        }

        let lower_bound_constant = file
            .lower_bound_constant
            .unwrap_or(DEFAULT_LOWER_BOUND_CONSTANT);
        if !(lower_bound_constant > 0.0 && lower_bound_constant.is_finite()) {
            return Err(invalid("lower_bound_constant must be positive"));
        }

        Ok(Self {
            channels: k,
            horizon,
            runs,
            base_seed: file.base_seed.unwrap_or(0),
            threads: file.threads,
            pu,
            su_policy,
            attacker,
            checkpoints,
            output_path: file
                .output_path
                .clone()
                .unwrap_or_else(|| PathBuf::from("results.csv")),
            lower_bound_constant,
        })
    }

    pub fn pola_params(&self) -> Option<PolaParams> {
        match self.attacker {
            AttackerSpec::Pola { eta } => Some(PolaParams {
                channels: self.channels,
                horizon: self.horizon,
                eta,
            }),
            _ => None,
        }
    }

    pub fn prola_params(&self) -> Option<ProlaParams> {
        match self.attacker {
            AttackerSpec::Prola { gamma, eta, m } => Some(ProlaParams {
                channels: self.channels,
                horizon: self.horizon,
                gamma,
                eta,
                observations: m,
            }),
            _ => None,
        }
    }
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn resolve_pu(file: &ConfigFile) -> Result<PuModel, ConfigError> {
    let k = file.channels;
    match file.pu_model.unwrap_or(PuKind::Iid) {
        PuKind::Iid => {
            if file.pu_p01.is_some() || file.pu_p10.is_some() || file.pu_p1.is_some() {
                return Err(invalid(
                    "pu_p01/pu_p10/pu_p1 only apply to pu_model = \"markov\"",
                ));
            }
            Ok(PuModel::Iid {
                idle_prob: file
                    .pu_idle_prob
                    .clone()
                    .unwrap_or_else(|| default_vector(&DEFAULT_IDLE_PROB, k, 0)),
            })
        }
        PuKind::Markov => {
            if file.pu_idle_prob.is_some() {
                return Err(invalid("pu_idle_prob only applies to pu_model = \"iid\""));
            }
            Ok(PuModel::Markov {
                p01: file
                    .pu_p01
                    .clone()
                    .unwrap_or_else(|| default_vector(&DEFAULT_P01, k, 1)),
                p10: file
                    .pu_p10
                    .clone()
                    .unwrap_or_else(|| default_vector(&DEFAULT_P10, k, 2)),
                p1: file
                    .pu_p1
                    .clone()
                    .unwrap_or_else(|| default_vector(&DEFAULT_P1, k, 3)),
            })
        }
    }
}

/// Reference vector truncated or extended to `k` entries. Extra entries are
/// uniform draws from a fixed-key ChaCha8 stream (one stream per vector), so
/// every `K` sees the same first channels.
pub fn default_vector(base: &[f64; 10], k: usize, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x005e_ed0f_c4a7);
    rng.set_stream(stream);
    let mut v: Vec<f64> = base.iter().copied().take(k).collect();
    while v.len() < k {
        // two decimals, like the reference vectors
        v.push((rng.gen::<f64>() * 100.0).round() / 100.0);
    }
    v
}

fn resolve_su(file: &ConfigFile) -> Result<SuPolicy, ConfigError> {
    let k = file.channels;
    let policy = file.su_policy.as_deref().unwrap_or("hedge");
    match policy {
        "hedge" => {
            let eta = file
                .su_eta
                .unwrap_or_else(|| hedge_default_eta(k, file.horizon_slots));
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(invalid(format!("su_eta must be positive, got {eta}")));
            }
            Ok(SuPolicy::Hedge { eta })
        }
        "fixed" => Ok(SuPolicy::FixedChannel {
            channel: channel_field(file.su_channel, "su_channel", k)?,
        }),
        "uniform" => Ok(SuPolicy::UniformRandom),
        other => Err(invalid(format!(
            "unknown su_policy {other:?} (expected hedge, fixed or uniform)"
        ))),
    }
}

fn channel_field(v: Option<Channel>, name: &str, k: usize) -> Result<Channel, ConfigError> {
    match v {
        Some(c) if c < k => Ok(c),
        Some(c) => Err(invalid(format!(
            "{name} = {c} out of range for {k} channels (zero-based)"
        ))),
        None => Err(invalid(format!(
            "{name} is required for a fixed-channel policy"
        ))),
    }
}

fn resolve_attacker(file: &ConfigFile) -> Result<AttackerSpec, ConfigError> {
    let k = file.channels;
    let horizon = file.horizon_slots;
    let name = file.attacker.as_deref().unwrap_or("prola");
    let learner_only = |field: Option<f64>, key: &str| match field {
        Some(_) => Err(invalid(format!(
            "{key} only applies to attacker = \"pola\" or \"prola\""
        ))),
        None => Ok(()),
    };
    if name != "prola" && (file.prola_gamma.is_some() || file.prola_observations.is_some()) {
        return Err(invalid(
            "prola_gamma/prola_observations only apply to attacker = \"prola\"",
        ));
    }
    match name {
        "pola" => {
            let params = match file.eta_override {
                Some(eta) => PolaParams::new(k, horizon, eta)?,
                None => PolaParams::with_default_eta(k, horizon)?,
            };
            Ok(AttackerSpec::Pola { eta: params.eta })
        }
        "prola" => {
            let m = file.prola_observations.unwrap_or(1);
            let params = match (file.prola_gamma, file.eta_override) {
                (None, None) => prola_default_params(k, horizon)?.with_observations(m)?,
                (None, Some(eta)) => ProlaParams::new(k, horizon, 0.5, eta, m)?,
                (Some(gamma), Some(eta)) => ProlaParams::new(k, horizon, gamma, eta, m)?,
                (Some(_), None) => return Err(invalid(
                    "prola_gamma needs eta_override: the default learning rate assumes gamma = 0.5",
                )),
            };
            Ok(AttackerSpec::Prola {
                gamma: params.gamma,
                eta: params.eta,
                m: params.observations,
            })
        }
        "uniform" => {
            learner_only(file.eta_override, "eta_override")?;
            Ok(AttackerSpec::UniformRandom)
        }
        "fixed" => {
            learner_only(file.eta_override, "eta_override")?;
            Ok(AttackerSpec::FixedChannel {
                channel: channel_field(file.attacker_channel, "attacker_channel", k)?,
            })
        }
        "none" => {
            learner_only(file.eta_override, "eta_override")?;
            Ok(AttackerSpec::None)
        }
        other => Err(invalid(format!(
            "unknown attacker {other:?} (expected pola, prola, uniform, fixed or none)"
        ))),
    }
}
