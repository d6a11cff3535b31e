//! Trial orchestration for every experiment kind.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{ContextDist, FnIdx, FunctionClass, LabeledDataset, MixturePolicy};
use crate::eluder::{default_grid, full_domain, longest_independent_sequence, SearchMode, EXACT_DOMAIN_LIMIT};
use crate::environment::{run_sampler, Environment, NoiseModel};
use crate::error::{Error, Result};
use crate::evaluation::{extract_eluder_policy, extract_greedy_policy, simple_regret, RegretReport};
use crate::modsel::{modsel_pipeline, loss_envelope, ModelFamily, Selector};
use crate::planning::{eluder_plan, uniform_plan, Plan};
use crate::rng::{Purpose, Substreams};
use crate::treebandit::{
    build_tree_class, gap_experiment, tree_eluder_certificate, GapBudgets, GapSettings, Strategy,
    TreeClassSpec,
};

use super::config::{ExperimentConfig, ExperimentKind, FixtureConfig, PlanStrategy, SelectorKind};
use super::io::{read_environment, read_family, read_samples, write_policy, write_results, Cell, Record, SampleRow};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStreams {
    pub trial: u64,
    /// `(purpose, ChaCha stream id)` pairs under the master key.
    pub streams: Vec<(String, u64)>,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub trials: Vec<TrialStreams>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: ExperimentConfig,
}

/// Headline numbers of a finished run, printed by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub summary: Vec<(String, f64)>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Aggregate of per-trial simple regrets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretSummary {
    pub trials: usize,
    pub mean_regret: f64,
    pub median_regret: f64,
    pub p90_regret: f64,
    pub max_regret: f64,
    pub success_rate: f64,
    pub eps: f64,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    (sorted[(n - 1) / 2] + sorted[n / 2]) / 2.0
}

pub fn summarize_regrets(regrets: &[f64], eps: f64) -> RegretSummary {
    let mut s = regrets.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    RegretSummary {
        trials: n,
        mean_regret: s.iter().sum::<f64>() / n as f64,
        median_regret: median(&s),
        p90_regret: percentile(&s, 0.9),
        max_regret: s[n - 1],
        success_rate: s.iter().filter(|&&r| r <= eps).count() as f64 / n as f64,
        eps,
    }
}

impl Record for RegretSummary {
    fn header() -> &'static [&'static str] {
        &["trials", "mean_regret", "median_regret", "p90_regret", "max_regret", "success_rate", "eps"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.trials.into(),
            self.mean_regret.into(),
            self.median_regret.into(),
            self.p90_regret.into(),
            self.max_regret.into(),
            self.success_rate.into(),
            self.eps.into(),
        ]
    }
}

impl RegretSummary {
    fn headline(&self) -> Vec<(String, f64)> {
        vec![
            ("trials".into(), self.trials as f64),
            ("mean_regret".into(), self.mean_regret),
            ("median_regret".into(), self.median_regret),
            ("p90_regret".into(), self.p90_regret),
            ("success_rate".into(), self.success_rate),
        ]
    }
}

/// Per-trial row of `pipeline` and `evaluate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrial {
    pub trial: u64,
    pub f_star: FnIdx,
    pub samples: usize,
    pub policy_value: f64,
    pub optimal_value: f64,
    pub simple_regret: f64,
    pub success: bool,
}

impl PipelineTrial {
    fn new(trial: u64, f_star: FnIdx, samples: usize, r: RegretReport, eps: f64) -> Self {
        Self {
            trial,
            f_star,
            samples,
            policy_value: r.policy_value,
            optimal_value: r.optimal_value,
            simple_regret: r.simple_regret,
            success: r.simple_regret <= eps,
        }
    }
}

impl Record for PipelineTrial {
    fn header() -> &'static [&'static str] {
        &["trial", "f_star", "samples", "policy_value", "optimal_value", "simple_regret", "success"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.trial.into(),
            self.f_star.into(),
            self.samples.into(),
            self.policy_value.into(),
            self.optimal_value.into(),
            self.simple_regret.into(),
            self.success.into(),
        ]
    }
}

/// A realizable problem: class, context distribution, noise and (optionally)
/// a fixed `f*`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub class: FunctionClass,
    pub dist: ContextDist,
    pub noise: NoiseModel,
    pub f_star: Option<FnIdx>,
}

impl Problem {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.fixture {
            FixtureConfig::Linear(spec) => {
                let fx = spec.build()?;
                Ok(Self {
                    class: fx.class,
                    dist: fx.dist,
                    noise: cfg.noise,
                    f_star: Some(fx.f_star),
                })
            }
            FixtureConfig::Tree { height, eps, f_star } => {
                let tree = build_tree_class(&TreeClassSpec::new(*height, *eps)?)?;
                if let Some(f) = f_star {
                    tree.class.check_fn(*f)?;
                }
                Ok(Self {
                    class: tree.class,
                    dist: ContextDist::point_mass(0, 1)?,
                    noise: cfg.noise,
                    f_star: *f_star,
                })
            }
            FixtureConfig::Table { environment } => {
                let (class, env) = read_environment(environment)?;
                Ok(Self {
                    class,
                    dist: env.dist().clone(),
                    noise: *env.noise(),
                    f_star: env.f_star(),
                })
            }
            FixtureConfig::Nested(_) | FixtureConfig::Family { .. } => Err(Error::Config(
                "a model-family fixture only supports the modsel and eluder experiments".into(),
            )),
        }
    }

    /// `f*` of a trial: the fixed one, or a uniform draw from the trial's
    /// own stream.
    pub fn f_star(&self, streams: &Substreams, trial: u64) -> FnIdx {
        self.f_star.unwrap_or_else(|| {
            streams
                .rng(trial, Purpose::TrueFunction)
                .random_range(0..self.class.len())
        })
    }

    pub fn environment(&self, f_star: FnIdx) -> Result<Environment> {
        Environment::from_class(&self.class, f_star, self.dist.clone(), self.noise)
    }

    /// Offline contexts of a trial, drawn from `P` on their own stream.
    pub fn offline_contexts(&self, streams: &Substreams, trial: u64, m: usize) -> Vec<usize> {
        let mut rng = streams.rng(trial, Purpose::OfflineContexts);
        (0..m).map(|_| self.dist.sample(&mut rng)).collect()
    }
}

fn make_plan(problem: &Problem, cfg: &ExperimentConfig, streams: &Substreams, trial: u64) -> Result<Plan> {
    match cfg.strategy {
        PlanStrategy::Uniform => uniform_plan(cfg.horizon),
        PlanStrategy::Eluder => {
            let offline = problem.offline_contexts(streams, trial, cfg.offline_len());
            eluder_plan(
                &problem.class,
                &offline,
                cfg.horizon,
                &cfg.confidence(problem.class.range_bound())?,
            )
        }
    }
}

enum Extracted {
    Mixture(MixturePolicy),
    Greedy(crate::domain::DeterministicPolicy),
}

impl Extracted {
    fn regret(&self, env: &Environment) -> Result<RegretReport> {
        match self {
            Extracted::Mixture(m) => simple_regret(m, env),
            Extracted::Greedy(p) => simple_regret(p, env),
        }
    }

    fn into_mixture(self) -> MixturePolicy {
        match self {
            Extracted::Mixture(m) => m,
            Extracted::Greedy(p) => p.into(),
        }
    }
}

fn extract(problem: &Problem, cfg: &ExperimentConfig, data: &LabeledDataset) -> Result<Extracted> {
    match cfg.strategy {
        PlanStrategy::Eluder => Ok(Extracted::Mixture(extract_eluder_policy(
            &problem.class,
            data,
            &cfg.confidence(problem.class.range_bound())?,
        )?)),
        PlanStrategy::Uniform => Ok(Extracted::Greedy(extract_greedy_policy(&problem.class, data)?)),
    }
}

/// Plan, sample, extract and evaluate one trial.
pub fn pipeline_trial(
    problem: &Problem,
    cfg: &ExperimentConfig,
    streams: &Substreams,
    trial: u64,
) -> Result<PipelineTrial> {
    let f_star = problem.f_star(streams, trial);
    let env = problem.environment(f_star)?;
    let plan = make_plan(problem, cfg, streams, trial)?;
    let data = run_sampler(&env, &plan, &problem.class, &mut streams.sampler(trial))?;
    let report = extract(problem, cfg, &data)?.regret(&env)?;
    Ok(PipelineTrial::new(trial, f_star, data.len(), report, cfg.eps))
}

fn thread_pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs `f` for every trial on the configured pool; results come back in
/// trial order.
fn per_trial<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    thread_pool(cfg)?.install(|| (0..cfg.trials as u64).into_par_iter().map(f).collect())
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        self.written.push(name.to_string());
        Ok(p)
    }

    fn results<R: Record>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let p = self.path(name)?;
        write_results(rows, &p)
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name)?;
        fs::write(&p, body).map_err(|e| Error::io(&p, e))
    }
}

/// Executes the experiment and writes `manifest.json` plus its artifacts to
/// `cfg.out`.
pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(Error::Config(format!(
                "config is for `{}` but `{}` was requested",
                k.name(),
                kind.name()
            )));
        }
    }
    cfg.validate()?;
    let started = now_unix();
    let streams = Substreams::new(cfg.seed);
    let mut out = Output::new(&cfg.out)?;
    let summary = match kind {
        ExperimentKind::Plan => run_plan(cfg, &streams, &mut out)?,
        ExperimentKind::Sample => run_sample(cfg, &streams, &mut out)?,
        ExperimentKind::Evaluate => run_evaluate(cfg, &streams, &mut out)?,
        ExperimentKind::Pipeline => run_pipeline(cfg, &streams, &mut out)?,
        ExperimentKind::Gap => run_gap(cfg, &streams, &mut out)?,
        ExperimentKind::Modsel => run_modsel(cfg, &streams, &mut out)?,
        ExperimentKind::Eluder => run_eluder(cfg, &mut out)?,
    };
    let manifest = RunManifest {
        kind,
        config_hash: config_hash(cfg),
        master_seed: cfg.seed,
        tool_version: TOOL_VERSION.to_string(),
        trials: (0..cfg.trials as u64)
            .map(|trial| TrialStreams {
                trial,
                streams: Purpose::ALL
                    .iter()
                    .map(|p| (p.name().to_string(), Substreams::stream_id(trial, *p)))
                    .collect(),
            })
            .collect(),
        outputs: out.written.clone(),
        started_unix: started,
        finished_unix: now_unix(),
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    out.text("manifest.json", &(json + "\n"))?;
    Ok(RunOutcome {
        out_dir: cfg.out.clone(),
        summary,
    })
}

fn run_plan(cfg: &ExperimentConfig, streams: &Substreams, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let problem = Problem::from_config(cfg)?;
    let plans = per_trial(cfg, |trial| make_plan(&problem, cfg, streams, trial))?;
    for (trial, plan) in plans.iter().enumerate() {
        out.text(&format!("plans/plan-{trial:04}.toml"), &plan.to_toml())?;
    }
    Ok(vec![("plans".into(), plans.len() as f64), ("horizon".into(), cfg.horizon as f64)])
}

fn run_sample(cfg: &ExperimentConfig, streams: &Substreams, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let problem = Problem::from_config(cfg)?;
    let fixed_plan = match &cfg.plan {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(Plan::from_toml(&text).map_err(|e| Error::Parse {
                path: p.clone(),
                reason: e.to_string(),
            })?)
        }
        None => None,
    };
    let datasets = per_trial(cfg, |trial| {
        let env = problem.environment(problem.f_star(streams, trial))?;
        let plan = match &fixed_plan {
            Some(p) => p.clone(),
            None => make_plan(&problem, cfg, streams, trial)?,
        };
        run_sampler(&env, &plan, &problem.class, &mut streams.sampler(trial))
    })?;
    let rows: Vec<SampleRow> = datasets
        .iter()
        .enumerate()
        .flat_map(|(trial, d)| {
            d.records().iter().enumerate().map(move |(i, s)| (trial, i, s))
        })
        .map(|(trial, i, s)| SampleRow {
            trial: trial as u64,
            t: i + 1,
            sample: s,
            class: &problem.class,
        })
        .collect();
    out.results("samples.csv", &rows)?;
    Ok(vec![("trials".into(), datasets.len() as f64), ("records".into(), rows.len() as f64)])
}

fn run_evaluate(cfg: &ExperimentConfig, streams: &Substreams, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let problem = Problem::from_config(cfg)?;
    let data_path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("evaluate needs `data` (a samples file)".into()))?;
    let groups = read_samples(data_path, &problem.class)?;
    let results: Vec<(PipelineTrial, MixturePolicy)> = thread_pool(cfg)?.install(|| {
        groups
            .par_iter()
            .map(|(trial, data)| {
                let f_star = problem.f_star(streams, *trial);
                let env = problem.environment(f_star)?;
                let policy = extract(&problem, cfg, data)?;
                let report = policy.regret(&env)?;
                Ok((
                    PipelineTrial::new(*trial, f_star, data.len(), report, cfg.eps),
                    policy.into_mixture(),
                ))
            })
            .collect::<Result<_>>()
    })?;
    for (row, policy) in &results {
        let p = out.path(&format!("policies/policy-{:04}.csv", row.trial))?;
        write_policy(policy, &problem.class, &p)?;
    }
    let rows: Vec<PipelineTrial> = results.into_iter().map(|(r, _)| r).collect();
    finish_regret_rows(cfg, out, &rows)
}

fn finish_regret_rows(cfg: &ExperimentConfig, out: &mut Output, rows: &[PipelineTrial]) -> Result<Vec<(String, f64)>> {
    out.results("trials.csv", rows)?;
    if rows.is_empty() {
        out.results::<RegretSummary>("summary.csv", &[])?;
        return Ok(vec![("trials".into(), 0.0)]);
    }
    let regrets: Vec<f64> = rows.iter().map(|r| r.simple_regret).collect();
    let summary = summarize_regrets(&regrets, cfg.eps);
    out.results("summary.csv", &[summary])?;
    Ok(summary.headline())
}

fn run_pipeline(cfg: &ExperimentConfig, streams: &Substreams, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let problem = Problem::from_config(cfg)?;
    let rows = per_trial(cfg, |trial| pipeline_trial(&problem, cfg, streams, trial))?;
    finish_regret_rows(cfg, out, &rows)
}

impl Record for crate::treebandit::GapTrial {
    fn header() -> &'static [&'static str] {
        &["trial", "f_star", "strategy", "budget", "samples_used", "simple_regret"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.trial.into(),
            self.f_star.into(),
            self.strategy.name().into(),
            self.budget.into(),
            self.samples_used.into(),
            self.simple_regret.into(),
        ]
    }
}

impl Record for crate::treebandit::StrategySummary {
    fn header() -> &'static [&'static str] {
        &["strategy", "budget", "trials", "success_rate", "mean_regret", "std_regret"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.strategy.name().into(),
            self.budget.into(),
            self.trials.into(),
            self.success_rate.into(),
            self.mean_regret.into(),
            self.std_regret.into(),
        ]
    }
}

fn run_gap(cfg: &ExperimentConfig, streams: &Substreams, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let FixtureConfig::Tree { height, eps, .. } = cfg.fixture else {
        return Err(Error::Config("the gap experiment needs a tree fixture".into()));
    };
    let spec = TreeClassSpec::new(height, eps)?;
    let defaults = GapBudgets::from_spec(&spec);
    let settings = GapSettings {
        trials: cfg.trials,
        budgets: GapBudgets {
            static_budget: cfg.gap.static_budget.unwrap_or(defaults.static_budget),
            adaptive_budget: cfg.gap.adaptive_budget.unwrap_or(defaults.adaptive_budget),
        },
        noise: cfg.noise,
        confidence: cfg.confidence(1.0)?,
        strategies: cfg.gap.strategies.clone().unwrap_or_else(|| Strategy::ALL.to_vec()),
    };
    let report = thread_pool(cfg)?.install(|| gap_experiment(&spec, &settings, streams))?;
    out.results("trials.csv", &report.trials)?;
    out.results("summary.csv", &report.strategies)?;
    out.text(
        "notes.txt",
        "f* is drawn uniformly from the tree class in every trial; the lower bound \
         concerns the worst-case f*, so static success rates here are an average-case view.\n",
    )?;
    Ok(report
        .strategies
        .iter()
        .flat_map(|s| {
            [
                (format!("{}.success_rate", s.strategy.name()), s.success_rate),
                (format!("{}.mean_regret", s.strategy.name()), s.mean_regret),
            ]
        })
        .collect())
}

/// Per-trial row of `modsel`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModselTrial {
    pub trial: u64,
    pub f_star: FnIdx,
    pub true_class: usize,
    pub selected: usize,
    pub simple_regret: f64,
    pub selected_population_loss: f64,
    pub true_class_population_loss: f64,
    pub envelope: f64,
    pub within_envelope: bool,
    pub oracle_regret: f64,
}

impl Record for ModselTrial {
    fn header() -> &'static [&'static str] {
        &[
            "trial",
            "f_star",
            "true_class",
            "selected",
            "simple_regret",
            "selected_population_loss",
            "true_class_population_loss",
            "envelope",
            "within_envelope",
            "oracle_regret",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.trial.into(),
            self.f_star.into(),
            self.true_class.into(),
            self.selected.into(),
            self.simple_regret.into(),
            self.selected_population_loss.into(),
            self.true_class_population_loss.into(),
            self.envelope.into(),
            self.within_envelope.into(),
            self.oracle_regret.into(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModselSummary {
    pub trials: usize,
    pub mean_regret: f64,
    pub p90_regret: f64,
    pub oracle_p90_regret: f64,
    pub true_class_selected_rate: f64,
    pub within_envelope_rate: f64,
}

impl Record for ModselSummary {
    fn header() -> &'static [&'static str] {
        &[
            "trials",
            "mean_regret",
            "p90_regret",
            "oracle_p90_regret",
            "true_class_selected_rate",
            "within_envelope_rate",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.trials.into(),
            self.mean_regret.into(),
            self.p90_regret.into(),
            self.oracle_p90_regret.into(),
            self.true_class_selected_rate.into(),
            self.within_envelope_rate.into(),
        ]
    }
}

/// Inputs shared by all model-selection trials.
pub struct ModselSetup {
    pub family: ModelFamily,
    pub dist: ContextDist,
    /// Fixed environment (family files) or `None` to draw `f*` per trial
    /// from `F_{true_class} ∖ F_{true_class − 1}`.
    pub env: Option<Environment>,
    pub true_class: usize,
}

impl ModselSetup {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.fixture {
            FixtureConfig::Nested(spec) => {
                let (family, dist) = spec.build()?;
                if cfg.modsel.true_class >= family.len() {
                    return Err(Error::Config(format!(
                        "true_class {} but the family has {} classes",
                        cfg.modsel.true_class,
                        family.len()
                    )));
                }
                Ok(Self {
                    family,
                    dist,
                    env: None,
                    true_class: cfg.modsel.true_class,
                })
            }
            FixtureConfig::Family {
                family,
                environment,
            } => {
                let family = read_family(family)?;
                let (_, env) = read_environment(environment)?;
                env.check_compatible(family.class(0))?;
                let true_class = family.true_index_hint().unwrap_or(cfg.modsel.true_class);
                if true_class >= family.len() {
                    return Err(Error::Config(format!("true class {true_class} is not in the family")));
                }
                Ok(Self {
                    dist: env.dist().clone(),
                    family,
                    env: Some(env),
                    true_class,
                })
            }
            _ => Err(Error::Config("modsel needs a nested or family fixture".into())),
        }
    }

    fn environment(&self, noise: NoiseModel, streams: &Substreams, trial: u64) -> Result<(FnIdx, Environment)> {
        if let Some(env) = &self.env {
            return Ok((env.f_star().unwrap_or(0), env.clone()));
        }
        let lo = if self.true_class == 0 {
            0
        } else {
            self.family.class(self.true_class - 1).len()
        };
        let class = self.family.class(self.true_class);
        let f = streams
            .rng(trial, Purpose::TrueFunction)
            .random_range(lo..class.len());
        Ok((f, Environment::from_class(class, f, self.dist.clone(), noise)?))
    }
}

pub fn modsel_trial(
    setup: &ModselSetup,
    cfg: &ExperimentConfig,
    streams: &Substreams,
    trial: u64,
) -> Result<ModselTrial> {
    let (f_star, env) = setup.environment(cfg.noise, streams, trial)?;
    let selector = match cfg.modsel.selector {
        SelectorKind::TestLoss => Selector::TestLoss,
        SelectorKind::EpsKnown => Selector::EpsKnown {
            eps: cfg.eps,
            confidence: cfg.confidence(setup.family.class(0).range_bound())?,
            constants: cfg.constants,
        },
    };
    let (_, selected, report) =
        modsel_pipeline(&setup.family, &env, cfg.horizon, &mut streams.sampler(trial), &selector)?;
    let oracle_regret = if cfg.modsel.oracle {
        let single = setup.family.single(setup.true_class)?;
        let (_, _, r) = modsel_pipeline(&single, &env, cfg.horizon, &mut streams.sampler(trial), &selector)?;
        r.regret.simple_regret
    } else {
        f64::NAN
    };
    let envelope = loss_envelope(
        cfg.modsel.envelope_c,
        cfg.horizon,
        setup.family.len(),
        setup.family.class(setup.true_class).len(),
        cfg.delta,
    );
    let sel = report.selected_population_loss();
    let truth = report.population_losses[setup.true_class];
    Ok(ModselTrial {
        trial,
        f_star,
        true_class: setup.true_class,
        selected,
        simple_regret: report.regret.simple_regret,
        selected_population_loss: sel,
        true_class_population_loss: truth,
        envelope,
        within_envelope: sel <= envelope,
        oracle_regret,
    })
}

fn run_modsel(cfg: &ExperimentConfig, streams: &Substreams, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let setup = ModselSetup::from_config(cfg)?;
    let rows = per_trial(cfg, |trial| modsel_trial(&setup, cfg, streams, trial))?;
    out.results("trials.csv", &rows)?;
    let n = rows.len() as f64;
    let mut regrets: Vec<f64> = rows.iter().map(|r| r.simple_regret).collect();
    regrets.sort_by(f64::total_cmp);
    let mut oracle: Vec<f64> = rows.iter().map(|r| r.oracle_regret).collect();
    oracle.sort_by(f64::total_cmp);
    let summary = ModselSummary {
        trials: rows.len(),
        mean_regret: regrets.iter().sum::<f64>() / n,
        p90_regret: percentile(&regrets, 0.9),
        oracle_p90_regret: percentile(&oracle, 0.9),
        true_class_selected_rate: rows.iter().filter(|r| r.selected == r.true_class).count() as f64 / n,
        within_envelope_rate: rows.iter().filter(|r| r.within_envelope).count() as f64 / n,
    };
    out.results("summary.csv", &[summary])?;
    Ok(vec![
        ("p90_regret".into(), summary.p90_regret),
        ("oracle_p90_regret".into(), summary.oracle_p90_regret),
        ("within_envelope_rate".into(), summary.within_envelope_rate),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct EluderRow {
    scale: f64,
    length: usize,
}

impl Record for EluderRow {
    fn header() -> &'static [&'static str] {
        &["scale", "length"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![self.scale.into(), self.length.into()]
    }
}

fn run_eluder(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<(String, f64)>> {
    let class = match &cfg.fixture {
        FixtureConfig::Nested(spec) => spec.build()?.0.classes().last().cloned().expect("nonempty"),
        FixtureConfig::Family { family, .. } => read_family(family)?.classes().last().cloned().expect("nonempty"),
        _ => Problem::from_config(cfg)?.class,
    };
    let domain = full_domain(&class);
    let mode = cfg.eluder.mode.unwrap_or(if domain.len() <= EXACT_DOMAIN_LIMIT {
        SearchMode::Exact
    } else {
        SearchMode::Greedy
    });
    let grid = cfg.eluder.grid.clone().unwrap_or_else(|| default_grid(&class, cfg.eps));
    if grid.is_empty() || grid.iter().any(|&g| !(g >= cfg.eps)) {
        return Err(Error::Config(format!("eluder grid values must be ≥ eps = {}", cfg.eps)));
    }
    let rows = thread_pool(cfg)?.install(|| {
        grid.par_iter()
            .map(|&scale| {
                Ok(EluderRow {
                    scale,
                    length: longest_independent_sequence(&class, &domain, scale, mode)?.verified_length,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    out.results("eluder.csv", &rows)?;
    let estimate = rows.iter().map(|r| r.length).max().unwrap_or(0);
    let mut summary = vec![("eluder_estimate".into(), estimate as f64)];
    if let FixtureConfig::Tree { height, eps, .. } = cfg.fixture {
        let cert = tree_eluder_certificate(&TreeClassSpec::new(height, eps)?)?;
        summary.push(("tree_certificate_length".into(), cert.verified_length as f64));
    }
    Ok(summary)
}
