//! Experiment configuration: one TOML file per run, with CLI overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eluder::SearchMode;
use crate::environment::NoiseModel;
use crate::error::{Error, Result};
use crate::fixtures::{LinearFixtureSpec, NestedFixtureSpec};
use crate::regression::{CalibrationConstants, ConfidenceConfig};
use crate::treebandit::Strategy as GapStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Plan,
    Sample,
    Evaluate,
    Pipeline,
    Gap,
    Modsel,
    Eluder,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Plan => "plan",
            ExperimentKind::Sample => "sample",
            ExperimentKind::Evaluate => "evaluate",
            ExperimentKind::Pipeline => "pipeline",
            ExperimentKind::Gap => "gap",
            ExperimentKind::Modsel => "modsel",
            ExperimentKind::Eluder => "eluder",
        }
    }
}

/// Planning strategy for `plan`, `sample`, `evaluate` and `pipeline`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanStrategy {
    #[default]
    Eluder,
    Uniform,
}

/// Where the class and environment come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FixtureConfig {
    Linear(LinearFixtureSpec),
    Tree {
        height: u32,
        eps: f64,
        /// Fixed true function; drawn uniformly per trial when absent.
        #[serde(default)]
        f_star: Option<usize>,
    },
    /// An environment file (which references its class table).
    Table { environment: PathBuf },
    Nested(NestedFixtureSpec),
    /// A family file plus the environment the data come from.
    Family {
        family: PathBuf,
        environment: PathBuf,
    },
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig::Linear(LinearFixtureSpec::default())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    /// Defaults to `⌊2^{L−5} / (9ε²)⌋`.
    pub static_budget: Option<u64>,
    /// Defaults to `⌈2L ln(2L/ε) / ε²⌉`.
    pub adaptive_budget: Option<u64>,
    pub strategies: Option<Vec<GapStrategy>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    #[default]
    TestLoss,
    EpsKnown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModselConfig {
    pub selector: SelectorKind,
    /// Constant `C` of the excess-loss envelope.
    pub envelope_c: f64,
    /// For generated nested families: the class `f*` is drawn from (it is
    /// drawn from that class minus the next smaller one).
    pub true_class: usize,
    /// Also run the pipeline on the true class alone.
    pub oracle: bool,
}

impl Default for ModselConfig {
    fn default() -> Self {
        Self {
            selector: SelectorKind::TestLoss,
            envelope_c: 1.0,
            true_class: 0,
            oracle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EluderConfig {
    pub mode: Option<SearchMode>,
    /// Tolerances to scan; defaults to `{ε·2^k}` up to the class diameter.
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    pub seed: u64,
    pub trials: usize,
    pub out: PathBuf,
    /// Worker threads; all available cores when absent.
    pub threads: Option<usize>,
    pub horizon: usize,
    /// Offline contexts available to the planner; defaults to `horizon`.
    pub offline_contexts: Option<usize>,
    pub eps: f64,
    pub delta: f64,
    pub c_bar: f64,
    /// `B̄` used in the confidence radius; defaults to the noise bound, or
    /// `3σ` for untruncated Gaussian noise.
    pub noise_bound: Option<f64>,
    pub constants: CalibrationConstants,
    pub strategy: PlanStrategy,
    pub noise: NoiseModel,
    pub fixture: FixtureConfig,
    /// Plan file consumed by `sample`.
    pub plan: Option<PathBuf>,
    /// Samples file consumed by `evaluate`.
    pub data: Option<PathBuf>,
    pub gap: GapConfig,
    pub modsel: ModselConfig,
    pub eluder: EluderConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            seed: 0,
            trials: 1,
            out: PathBuf::from("results"),
            threads: None,
            horizon: 1000,
            offline_contexts: None,
            eps: 0.1,
            delta: 0.1,
            c_bar: 1.0,
            noise_bound: None,
            constants: CalibrationConstants::default(),
            strategy: PlanStrategy::default(),
            noise: NoiseModel::default(),
            fixture: FixtureConfig::default(),
            plan: None,
            data: None,
            gap: GapConfig::default(),
            modsel: ModselConfig::default(),
            eluder: EluderConfig::default(),
        }
    }
}

/// CLI overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    /// Reads, resolves relative paths against the file's directory, applies
    /// overrides and validates.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                config_error(format!("config file {} not found", path.display()))
            } else {
                Error::io(path, e)
            }
        })?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.resolve_paths(path);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        use super::io::relative_to;
        let fix = |p: &mut PathBuf| *p = relative_to(base, p);
        match &mut self.fixture {
            FixtureConfig::Table { environment } => fix(environment),
            FixtureConfig::Family {
                family,
                environment,
            } => {
                fix(family);
                fix(environment);
            }
            _ => {}
        }
        for p in [&mut self.plan, &mut self.data].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_error(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.eps > 0.0) {
            return Err(config_error(format!("eps = {} must be positive", self.eps)));
        }
        if self.horizon == 0 {
            return Err(config_error("horizon must be ≥ 1"));
        }
        if self.trials == 0 {
            return Err(config_error("trials must be ≥ 1"));
        }
        if !(self.c_bar > 0.0) {
            return Err(config_error(format!("c_bar = {} must be positive", self.c_bar)));
        }
        if self.threads == Some(0) {
            return Err(config_error("threads must be ≥ 1"));
        }
        if let Some(m) = self.offline_contexts {
            if m < self.horizon {
                return Err(config_error(format!(
                    "offline_contexts = {m} is smaller than horizon = {}",
                    self.horizon
                )));
            }
        }
        self.noise.validate().map_err(|e| config_error(e.to_string()))?;
        self.constants.validate().map_err(|e| config_error(e.to_string()))?;
        let files: Vec<&PathBuf> = match &self.fixture {
            FixtureConfig::Table { environment } => vec![environment],
            FixtureConfig::Family {
                family,
                environment,
            } => vec![family, environment],
            _ => vec![],
        };
        for p in files.into_iter().chain(&self.plan).chain(&self.data) {
            if !p.exists() {
                return Err(config_error(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn offline_len(&self) -> usize {
        self.offline_contexts.unwrap_or(self.horizon)
    }

    /// Confidence radius inputs for a class with range bound `b`.
    pub fn confidence(&self, b: f64) -> Result<ConfidenceConfig> {
        let noise_bound = match (self.noise_bound, self.noise) {
            (Some(v), _) => v,
            (None, NoiseModel::Gaussian { sigma }) => 3.0 * sigma,
            (None, n) => n.bound().unwrap_or(0.0),
        };
        ConfidenceConfig::new(self.delta, self.c_bar, b, noise_bound)
    }

    /// Canonical serialization, hashed into the manifest. The output
    /// directory and worker count do not affect results and are left out.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.threads = None;
        toml::to_string(&c).expect("config serializes")
    }
}
