//! Experiment configuration loaded from TOML.
//!
//! ```toml
//! [network]
//! num_cells = 7
//! users_per_cell = 6
//! antennas = 100
//! max_power_dbm = 23.0
//!
//! [experiment]
//! algorithms = ["nonorth_fp", "baseline_random"]
//! trials = 50
//! tau = [8, 16]
//! seed = 1
//! output = "results"
//! ```
//!
//! Every key is optional and unknown keys are rejected. See `README.md` for
//! the full schema.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use pilotforge_core::estimation::WeightPreset;
use pilotforge_core::network::{dbm_to_mw, noise_power_linear};
use pilotforge_core::nonorth::UpdateRule;
use pilotforge_core::orth::OrthStep;
use pilotforge_core::NetworkConfig;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Algorithm {
    NonorthFp,
    OrthFp,
    MaxminFp,
    BaselineOrthogonal,
    BaselineRandom,
    LowerBound,
    SmartAssignment,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::NonorthFp,
        Algorithm::OrthFp,
        Algorithm::MaxminFp,
        Algorithm::BaselineOrthogonal,
        Algorithm::BaselineRandom,
        Algorithm::LowerBound,
        Algorithm::SmartAssignment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NonorthFp => "nonorth_fp",
            Algorithm::OrthFp => "orth_fp",
            Algorithm::MaxminFp => "maxmin_fp",
            Algorithm::BaselineOrthogonal => "baseline_orthogonal",
            Algorithm::BaselineRandom => "baseline_random",
            Algorithm::LowerBound => "lower_bound",
            Algorithm::SmartAssignment => "smart_assignment",
        }
    }

    /// Whether the algorithm needs a distinct orthogonal pilot per in-cell user.
    pub fn needs_distinct_pilots(self) -> bool {
        matches!(
            self,
            Algorithm::OrthFp
                | Algorithm::MaxminFp
                | Algorithm::BaselineOrthogonal
                | Algorithm::SmartAssignment
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weights {
    Unit,
    Normalized,
}

impl From<Weights> for WeightPreset {
    fn from(w: Weights) -> Self {
        match w {
            Weights::Unit => WeightPreset::Unit,
            Weights::Normalized => WeightPreset::Normalized,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum StepChoice {
    Matching,
    LinearSearch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RuleChoice {
    Lagrange,
    Scaled,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct NetworkSection {
    num_cells: usize,
    users_per_cell: usize,
    antennas: usize,
    bs_distance_km: f64,
    max_power_dbm: f64,
    noise_psd_dbm_per_hz: f64,
    bandwidth_hz: f64,
    pathloss_a_db: f64,
    pathloss_b_db: f64,
    shadowing_std_db: f64,
    correlation_magnitude: f64,
    correlated: bool,
}

impl Default for NetworkSection {
    fn default() -> Self {
        Self {
            num_cells: 7,
            users_per_cell: 6,
            antennas: 100,
            bs_distance_km: 0.5,
            max_power_dbm: 23.0,
            noise_psd_dbm_per_hz: -169.0,
            bandwidth_hz: 20e6,
            pathloss_a_db: 128.1,
            pathloss_b_db: 37.6,
            shadowing_std_db: 8.0,
            correlation_magnitude: 0.5,
            correlated: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExperimentSection {
    algorithms: Vec<Algorithm>,
    weights: Weights,
    trials: usize,
    tau: Vec<usize>,
    seed: u64,
    output: PathBuf,
    rel_tol: f64,
    nonorth_max_iters: usize,
    nonorth_update: RuleChoice,
    orth_max_iters: usize,
    orth_step: StepChoice,
    maxmin_max_outer: usize,
    maxmin_max_inner: usize,
    traces: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            algorithms: vec![
                Algorithm::NonorthFp,
                Algorithm::OrthFp,
                Algorithm::BaselineOrthogonal,
                Algorithm::BaselineRandom,
                Algorithm::LowerBound,
            ],
            weights: Weights::Unit,
            trials: 200,
            tau: vec![16],
            seed: 0,
            output: PathBuf::from("results"),
            rel_tol: 1e-6,
            nonorth_max_iters: 500,
            nonorth_update: RuleChoice::Lagrange,
            orth_max_iters: 100,
            orth_step: StepChoice::Matching,
            maxmin_max_outer: 1,
            maxmin_max_inner: 100,
            traces: true,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    network: NetworkSection,
    #[serde(default)]
    experiment: ExperimentSection,
}

/// Iteration limits and variants of the iterative designs.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmOptions {
    pub rel_tol: f64,
    pub nonorth_max_iters: usize,
    pub nonorth_update: UpdateRule,
    pub orth_max_iters: usize,
    pub orth_step: OrthStep,
    pub maxmin_max_outer: usize,
    pub maxmin_max_inner: usize,
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            nonorth_max_iters: 500,
            nonorth_update: UpdateRule::LagrangeBisection,
            orth_max_iters: 100,
            orth_step: OrthStep::Matching,
            maxmin_max_outer: 1,
            maxmin_max_inner: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    /// Network template; `pilot_length` and `seed` are set per run.
    pub network: NetworkConfig,
    pub algorithms: Vec<Algorithm>,
    pub weights: WeightPreset,
    pub trials: usize,
    pub taus: Vec<usize>,
    pub output: PathBuf,
    pub seed: u64,
    pub options: AlgorithmOptions,
    /// Emit per-iteration trace files.
    pub traces: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self::from_file_config(FileConfig::default())
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let file: FileConfig = toml::from_str(text)?;
        let spec = Self::from_file_config(file);
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn from_file_config(file: FileConfig) -> Self {
        let n = file.network;
        let e = file.experiment;
        let network = NetworkConfig {
            num_cells: n.num_cells,
            users_per_cell: n.users_per_cell,
            antennas: n.antennas,
            pilot_length: e.tau.iter().copied().max().unwrap_or(1),
            bs_distance_km: n.bs_distance_km,
            max_power_mw: dbm_to_mw(n.max_power_dbm),
            noise_power_mw: noise_power_linear(n.noise_psd_dbm_per_hz, n.bandwidth_hz),
            pathloss_a_db: n.pathloss_a_db,
            pathloss_b_db: n.pathloss_b_db,
            shadowing_std_db: n.shadowing_std_db,
            correlation_magnitude: n.correlation_magnitude,
            correlated: n.correlated,
            seed: e.seed,
        };
        Self {
            network,
            algorithms: e.algorithms,
            weights: e.weights.into(),
            trials: e.trials,
            taus: e.tau,
            output: e.output,
            seed: e.seed,
            options: AlgorithmOptions {
                rel_tol: e.rel_tol,
                nonorth_max_iters: e.nonorth_max_iters,
                nonorth_update: match e.nonorth_update {
                    RuleChoice::Lagrange => UpdateRule::LagrangeBisection,
                    RuleChoice::Scaled => UpdateRule::NoiselessScaling,
                },
                orth_max_iters: e.orth_max_iters,
                orth_step: match e.orth_step {
                    StepChoice::Matching => OrthStep::Matching,
                    StepChoice::LinearSearch => OrthStep::LinearSearch,
                },
                maxmin_max_outer: e.maxmin_max_outer,
                maxmin_max_inner: e.maxmin_max_inner,
            },
            traces: e.traces,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return fail("at least one algorithm is required".into());
        }
        if self.taus.is_empty() || self.taus.contains(&0) {
            return fail("tau list must be nonempty with positive entries".into());
        }
        if !(self.options.rel_tol > 0.0) {
            return fail("rel_tol must be positive".into());
        }
        let k = self.network.users_per_cell;
        if let Some(a) = self.algorithms.iter().find(|a| a.needs_distinct_pilots()) {
            if let Some(t) = self.taus.iter().find(|&&t| t < k) {
                return fail(format!(
                    "{a} needs tau >= users_per_cell ({k}), got tau = {t}"
                ));
            }
        }
        if self.network.correlated && self.algorithms.contains(&Algorithm::MaxminFp) {
            return fail("maxmin_fp is defined for uncorrelated fading only".into());
        }
        let mut probe = self.network.clone();
        probe.pilot_length = self.taus.iter().copied().max().unwrap_or(1);
        probe.validate().or_else(|e| fail(e.to_string()))?;
        Ok(())
    }
}
