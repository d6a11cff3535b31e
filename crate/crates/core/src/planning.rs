//! The planning phase: uncertainty radii and the static plan constructors.
//!
//! An eluder plan is stored as its generating data (the planner dataset and
//! the β schedule parameters), not as per-context action tables. The policy
//! of step `t` is recomputed from `D_t = planner_dataset.prefix(t)`:
//!
//! `π_t(x) = argmax_a ω(x, a, D_t)` with
//! `ω(x, a, D) = max { f(x,a) − f'(x,a) : ‖f − f'‖_D ≤ 4β(t) }`.

use serde::{Deserialize, Serialize};

use crate::domain::{ActionIdx, ContextIdx, FunctionClass, Query, UnlabeledDataset};
use crate::error::{Error, Result};
use crate::norms::PairwiseNorms;
use crate::regression::ConfidenceConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Eluder,
    Uniform,
}

/// What the plan prescribes at `(t, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanAction {
    Play(ActionIdx),
    /// Uniform(A): the sampler draws the action.
    Randomize,
}

/// A static policy sequence `{π_t}`, fully fixed before any reward is seen.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    kind: PlanKind,
    horizon: usize,
    planner_dataset: UnlabeledDataset,
    confidence: Option<ConfidenceConfig>,
    class_size: usize,
}

impl Plan {
    pub fn kind(&self) -> PlanKind {
        self.kind
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn planner_dataset(&self) -> &UnlabeledDataset {
        &self.planner_dataset
    }

    pub fn confidence(&self) -> Option<&ConfidenceConfig> {
        self.confidence.as_ref()
    }

    /// Size of the class the plan was built for (0 for uniform plans).
    pub fn class_size(&self) -> usize {
        self.class_size
    }

    /// `4β(t)`, the planner's feasibility radius at step `t`.
    pub fn planner_radius(&self, t: usize) -> Option<f64> {
        self.confidence
            .as_ref()
            .map(|c| 4.0 * c.radius(t, self.class_size))
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::Index {
                kind: "plan step",
                index: t,
                size: self.horizon,
            });
        }
        Ok(())
    }

    fn check_class(&self, class: &FunctionClass) -> Result<()> {
        if self.kind == PlanKind::Eluder && class.len() != self.class_size {
            return Err(Error::validation(
                "plan",
                format!(
                    "built for |F| = {}, evaluated with |F| = {}",
                    self.class_size,
                    class.len()
                ),
            ));
        }
        if let Some(q) = self
            .planner_dataset
            .records()
            .iter()
            .find(|q| q.context >= class.n_contexts() || q.action >= class.n_actions())
        {
            return Err(Error::validation(
                "plan",
                format!("planner record {q:?} is outside the class's spaces"),
            ));
        }
        Ok(())
    }
}

/// Per-`(x, a)` orderings of the class values, used to prune the pair scan
/// in ω. Independent of the dataset, so built once per class.
#[derive(Debug, Clone)]
pub struct RadiusIndex {
    n_actions: usize,
    /// For each cell, function indices sorted by descending value.
    desc: Vec<Vec<u32>>,
}

impl RadiusIndex {
    pub fn new(class: &FunctionClass) -> Self {
        let n_actions = class.n_actions();
        let desc = (0..class.n_contexts() * n_actions)
            .map(|cell| {
                let (x, a) = (cell / n_actions, cell % n_actions);
                let mut order: Vec<u32> = (0..class.len() as u32).collect();
                order.sort_by(|&f, &g| {
                    class
                        .value(g as usize, x, a)
                        .total_cmp(&class.value(f as usize, x, a))
                        .then(f.cmp(&g))
                });
                order
            })
            .collect();
        Self { n_actions, desc }
    }

    /// `ω(x, a, D)` where `norms` holds the squared data norms of `D` and
    /// pairs are feasible when `‖f − f'‖_D ≤ radius`.
    pub fn omega(
        &self,
        class: &FunctionClass,
        norms: &PairwiseNorms,
        x: ContextIdx,
        a: ActionIdx,
        radius: f64,
    ) -> f64 {
        let order = &self.desc[x * self.n_actions + a];
        let r2 = radius * radius;
        let v = |f: u32| class.value(f as usize, x, a);
        let global_min = v(order[order.len() - 1]);
        let mut best = 0.0f64;
        for &f in order {
            let vf = v(f);
            if vf - global_min <= best {
                break;
            }
            let row = norms.row(f as usize);
            // Smallest feasible f' value first.
            for &g in order.iter().rev() {
                let gap = vf - v(g);
                if gap <= best {
                    break;
                }
                if row[g as usize] <= r2 {
                    best = gap;
                    break;
                }
            }
        }
        best
    }

    /// `argmax_a ω(x, a, D)`, ties to the lowest action, with the winning ω.
    pub fn argmax_action(
        &self,
        class: &FunctionClass,
        norms: &PairwiseNorms,
        x: ContextIdx,
        radius: f64,
    ) -> (ActionIdx, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..self.n_actions {
            let w = self.omega(class, norms, x, a, radius);
            if w > best.1 {
                best = (a, w);
            }
        }
        best
    }
}

/// `ω(x, a, D)` by batch construction of the pairwise norms of `D`.
pub fn uncertainty_radius(
    class: &FunctionClass,
    x: ContextIdx,
    a: ActionIdx,
    data: &[Query],
    radius: f64,
) -> Result<f64> {
    class.check_context(x)?;
    class.check_action(a)?;
    if !(radius >= 0.0) {
        return Err(Error::validation(
            "uncertainty radius",
            format!("radius {radius} must be non-negative"),
        ));
    }
    let norms = PairwiseNorms::from_dataset(class, data);
    Ok(RadiusIndex::new(class).omega(class, &norms, x, a, radius))
}

/// An eluder plan together with the planner's own uncertainty radii
/// `ω(x_t, π_t(x_t), D_t)`, one per step.
#[derive(Debug, Clone)]
pub struct PlanTrace {
    pub plan: Plan,
    pub radii: Vec<f64>,
}

/// Runs the eluder planner over the first `horizon` offline contexts.
pub fn eluder_plan(
    class: &FunctionClass,
    offline_contexts: &[ContextIdx],
    horizon: usize,
    cfg: &ConfidenceConfig,
) -> Result<Plan> {
    eluder_plan_traced(class, offline_contexts, horizon, cfg).map(|t| t.plan)
}

pub fn eluder_plan_traced(
    class: &FunctionClass,
    offline_contexts: &[ContextIdx],
    horizon: usize,
    cfg: &ConfidenceConfig,
) -> Result<PlanTrace> {
    cfg.validate()?;
    if horizon == 0 {
        return Err(Error::validation("plan", "horizon must be ≥ 1"));
    }
    if offline_contexts.len() < horizon {
        return Err(Error::validation(
            "plan",
            format!(
                "{} offline contexts for horizon {horizon}; need m ≥ T",
                offline_contexts.len()
            ),
        ));
    }
    for &x in &offline_contexts[..horizon] {
        class.check_context(x)?;
    }
    let index = RadiusIndex::new(class);
    let mut norms = PairwiseNorms::zeros(class.len());
    let mut data = UnlabeledDataset::new();
    let mut radii = Vec::with_capacity(horizon);
    for (step, &x) in offline_contexts[..horizon].iter().enumerate() {
        let t = step + 1;
        let radius = 4.0 * cfg.radius(t, class.len());
        let (a, w) = index.argmax_action(class, &norms, x, radius);
        let q = Query::new(x, a);
        norms.update(class, q);
        data.push(q);
        radii.push(w);
    }
    Ok(PlanTrace {
        plan: Plan {
            kind: PlanKind::Eluder,
            horizon,
            planner_dataset: data,
            confidence: Some(*cfg),
            class_size: class.len(),
        },
        radii,
    })
}

/// The uniform strategy: `π_t = Uniform(A)` for every `t ≤ horizon`.
pub fn uniform_plan(horizon: usize) -> Result<Plan> {
    if horizon == 0 {
        return Err(Error::validation("plan", "horizon must be ≥ 1"));
    }
    Ok(Plan {
        kind: PlanKind::Uniform,
        horizon,
        planner_dataset: UnlabeledDataset::new(),
        confidence: None,
        class_size: 0,
    })
}

/// `π_t(x)`, recomputed from `planner_dataset.prefix(t)`.
pub fn plan_policy_action(
    plan: &Plan,
    class: &FunctionClass,
    t: usize,
    x: ContextIdx,
) -> Result<PlanAction> {
    plan.check_step(t)?;
    class.check_context(x)?;
    match plan.kind {
        PlanKind::Uniform => Ok(PlanAction::Randomize),
        PlanKind::Eluder => {
            plan.check_class(class)?;
            let norms = PairwiseNorms::from_dataset(class, plan.planner_dataset.prefix(t));
            let radius = plan.planner_radius(t).expect("eluder plans carry a config");
            let (a, _) = RadiusIndex::new(class).argmax_action(class, &norms, x, radius);
            Ok(PlanAction::Play(a))
        }
    }
}

/// Walks an eluder plan forward one step at a time, keeping the planner
/// norms of `D_t` incrementally. Equivalent to [`plan_policy_action`] but
/// `O(|F|²)` per step instead of `O(|F|² t)`.
pub struct PlanCursor<'a> {
    plan: &'a Plan,
    class: &'a FunctionClass,
    index: Option<RadiusIndex>,
    norms: Option<PairwiseNorms>,
    t: usize,
}

impl<'a> PlanCursor<'a> {
    pub fn new(plan: &'a Plan, class: &'a FunctionClass) -> Result<Self> {
        plan.check_class(class)?;
        let eluder = plan.kind == PlanKind::Eluder;
        Ok(Self {
            plan,
            class,
            index: eluder.then(|| RadiusIndex::new(class)),
            norms: eluder.then(|| PairwiseNorms::zeros(class.len())),
            t: 1,
        })
    }

    /// Current step (1-based).
    pub fn step(&self) -> usize {
        self.t
    }

    pub fn norms(&self) -> Option<&PairwiseNorms> {
        self.norms.as_ref()
    }

    /// `π_t(x)` at the current step.
    pub fn action(&self, x: ContextIdx) -> PlanAction {
        match (&self.index, &self.norms) {
            (Some(index), Some(norms)) => {
                let radius = self.plan.planner_radius(self.t).expect("eluder plan");
                PlanAction::Play(index.argmax_action(self.class, norms, x, radius).0)
            }
            _ => PlanAction::Randomize,
        }
    }

    /// `ω(x, a, D_t)` at the current step (eluder plans only).
    pub fn omega(&self, x: ContextIdx, a: ActionIdx) -> Option<f64> {
        let radius = self.plan.planner_radius(self.t)?;
        Some(self.index.as_ref()?.omega(self.class, self.norms.as_ref()?, x, a, radius))
    }

    /// Moves from `D_t` to `D_{t+1}`.
    pub fn advance(&mut self) {
        if let Some(norms) = self.norms.as_mut() {
            if let Some(&q) = self.plan.planner_dataset.records().get(self.t - 1) {
                norms.update(self.class, q);
            }
        }
        self.t += 1;
    }
}

/// On-disk form of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub kind: PlanKind,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_bound: Option<f64>,
    #[serde(default)]
    pub class_size: usize,
    /// Planner records as `[context, action]`, in order.
    #[serde(default)]
    pub records: Vec<[usize; 2]>,
}

impl From<&Plan> for PlanFile {
    fn from(plan: &Plan) -> Self {
        let c = plan.confidence;
        Self {
            kind: plan.kind,
            horizon: plan.horizon,
            delta: c.map(|c| c.delta),
            c_bar: c.map(|c| c.c_bar),
            range_bound: c.map(|c| c.range_bound),
            noise_bound: c.map(|c| c.noise_bound),
            class_size: plan.class_size,
            records: plan
                .planner_dataset
                .records()
                .iter()
                .map(|q| [q.context, q.action])
                .collect(),
        }
    }
}

impl TryFrom<PlanFile> for Plan {
    type Error = Error;

    fn try_from(file: PlanFile) -> Result<Self> {
        match file.kind {
            PlanKind::Uniform => {
                if !file.records.is_empty() {
                    return Err(Error::validation("plan file", "uniform plan with records"));
                }
                uniform_plan(file.horizon)
            }
            PlanKind::Eluder => {
                let missing = |name| Error::validation("plan file", format!("eluder plan without {name}"));
                let cfg = ConfidenceConfig::new(
                    file.delta.ok_or_else(|| missing("delta"))?,
                    file.c_bar.ok_or_else(|| missing("c_bar"))?,
                    file.range_bound.ok_or_else(|| missing("range_bound"))?,
                    file.noise_bound.ok_or_else(|| missing("noise_bound"))?,
                )?;
                if file.horizon == 0 || file.records.len() != file.horizon {
                    return Err(Error::validation(
                        "plan file",
                        format!(
                            "{} records for horizon {}",
                            file.records.len(),
                            file.horizon
                        ),
                    ));
                }
                if file.class_size == 0 {
                    return Err(Error::validation("plan file", "class_size must be ≥ 1"));
                }
                Ok(Plan {
                    kind: PlanKind::Eluder,
                    horizon: file.horizon,
                    planner_dataset: UnlabeledDataset::from_records(
                        file.records.iter().map(|r| Query::new(r[0], r[1])).collect(),
                    ),
                    confidence: Some(cfg),
                    class_size: file.class_size,
                })
            }
        }
    }
}

impl Plan {
    pub fn to_toml(&self) -> String {
        toml::to_string(&PlanFile::from(self)).expect("plan file serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(text)
            .map_err(|e| Error::validation("plan file", e.to_string()))?;
        Plan::try_from(file)
    }
}
