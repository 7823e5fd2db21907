//! Online planners.
//!
//! All tree planners grow a [`BeliefTree`] from the planning belief, one
//! sampled trajectory per iteration, and keep deterministic bounds on every
//! root action. They differ in how actions are chosen inside the tree and at
//! the root:
//!
//! | kind       | in-tree action            | root action            |
//! |------------|---------------------------|------------------------|
//! | `pomcp`    | UCT on sampled returns    | best sampled mean      |
//! | `db-pomcp` | UCT, dominated pruned     | best lower bound       |
//! | `rb-pomcp` | best upper bound          | best lower bound       |
//!
//! `udb-full` keeps exact beliefs and grows observation subsets instead, and
//! `exact` runs the oracle.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::belief::Belief;
use crate::bounds::{prune_decision, BoundConfig, BoundInterval};
use crate::error::SolveError;
use crate::model::{ActionId, TabularPomdp};
use crate::oracle::exact_optimal_value;
use crate::tree::BeliefTree;

mod certify;
mod search;
mod udb;

pub use certify::{certify, CertifyReport};
pub use udb::udb_full_belief_plan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SolverKind {
    Pomcp,
    DbPomcp,
    RbPomcp,
    UdbFull,
    Exact,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] =
        [SolverKind::Pomcp, SolverKind::DbPomcp, SolverKind::RbPomcp, SolverKind::UdbFull, SolverKind::Exact];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Pomcp => "pomcp",
            SolverKind::DbPomcp => "db-pomcp",
            SolverKind::RbPomcp => "rb-pomcp",
            SolverKind::UdbFull => "udb-full",
            SolverKind::Exact => "exact",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.to_ascii_lowercase().replace('_', "-");
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver '{s}' (expected pomcp|db-pomcp|rb-pomcp|udb-full|exact)"))
    }
}

/// How `rb-pomcp` picks the observation and next state at each step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Descent {
    /// Sample from the model, as the other tree planners do.
    Sampled,
    /// Deterministically follow the largest bound gap, adding a trajectory
    /// not yet recorded wherever the gap comes from missing mass.
    #[default]
    Guided,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub iterations_max: Option<u64>,
    pub time_budget_ms: Option<u64>,
    /// Exploration constant, multiplied by `vmax` at the root time.
    pub uct_c: f64,
    pub seed: u64,
    /// Per-step value bounds; `None` uses [`BoundConfig::for_model`].
    pub bound_cfg: Option<BoundConfig>,
    pub stop_on_certified: bool,
    /// Root interval width at which bound-driven planners stop.
    pub tolerance: f64,
    pub descent: Descent,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, iterations: u64, seed: u64) -> Self {
        SolverConfig {
            kind,
            iterations_max: Some(iterations),
            time_budget_ms: None,
            uct_c: 1.0,
            seed,
            bound_cfg: None,
            stop_on_certified: false,
            tolerance: 1e-9,
            descent: Descent::default(),
        }
    }

    fn validate(&self) -> Result<(), SolveError> {
        if self.iterations_max.is_none() && self.time_budget_ms.is_none() && self.kind != SolverKind::Exact {
            return Err(SolveError::Config("set an iteration cap or a time budget".into()));
        }
        if !(self.uct_c >= 0.0) {
            return Err(SolveError::Config(format!("uct_c = {} must be non-negative", self.uct_c)));
        }
        if !(self.tolerance >= 0.0) {
            return Err(SolveError::Config(format!("tolerance = {} must be non-negative", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub chosen_action: ActionId,
    pub root_interval: BoundInterval,
    pub certified_optimal: bool,
    pub iterations_used: u64,
    pub wall_ms: f64,
    /// Bounds on `Q*(b_0, a)` for every action, in action order.
    pub action_intervals: Vec<(ActionId, BoundInterval)>,
    /// Root actions proven suboptimal.
    pub pruned: BTreeSet<ActionId>,
}

/// One row of a bound trace: a history visited during an iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: u64,
    pub node_depth: usize,
    pub mass: f64,
    pub upper: f64,
    pub lower: f64,
}

pub type Observer<'a> = &'a mut dyn FnMut(&TraceRow);

pub struct PlanOutput {
    pub result: PlanResult,
    /// Final search tree for the tree planners.
    pub tree: Option<BeliefTree>,
}

pub(crate) struct Budget {
    start: Instant,
    iterations: Option<u64>,
    time_ms: Option<u64>,
}

impl Budget {
    pub(crate) fn new(cfg: &SolverConfig) -> Self {
        Budget { start: Instant::now(), iterations: cfg.iterations_max, time_ms: cfg.time_budget_ms }
    }

    pub(crate) fn exhausted(&self, done: u64) -> bool {
        self.iterations.is_some_and(|n| done >= n)
            || self.time_ms.is_some_and(|ms| self.start.elapsed().as_secs_f64() * 1e3 >= ms as f64)
    }

    pub(crate) fn elapsed_ms(&self) -> f64 {
        self.start.elapsed().as_secs_f64() * 1e3
    }
}

/// Best lower bound among `allowed`, ties to the higher upper bound, then the
/// lowest id.
pub(crate) fn best_by_lower(intervals: &[(ActionId, BoundInterval)], allowed: impl Fn(ActionId) -> bool) -> ActionId {
    let mut best: Option<(ActionId, BoundInterval)> = None;
    for &(a, iv) in intervals.iter().filter(|(a, _)| allowed(*a)) {
        let better = match best {
            None => true,
            Some((_, b)) => iv.lower > b.lower || (iv.lower == b.lower && iv.upper > b.upper),
        };
        if better {
            best = Some((a, iv));
        }
    }
    best.map_or(0, |(a, _)| a)
}

pub(crate) fn bound_config(model: &TabularPomdp, cfg: &SolverConfig) -> BoundConfig {
    cfg.bound_cfg.clone().unwrap_or_else(|| BoundConfig::for_model(model))
}

/// Plans from `b0` with the solver named in `cfg`.
pub fn plan(model: &TabularPomdp, b0: &Belief, cfg: &SolverConfig) -> Result<PlanResult, SolveError> {
    Ok(plan_with(model, b0, cfg, None)?.result)
}

/// As [`plan`], reporting visited histories to `observer` after every
/// iteration and returning the search tree.
pub fn plan_with(
    model: &TabularPomdp,
    b0: &Belief,
    cfg: &SolverConfig,
    observer: Option<Observer<'_>>,
) -> Result<PlanOutput, SolveError> {
    cfg.validate()?;
    if b0.time() > model.horizon() {
        return Err(SolveError::PastHorizon { time: b0.time(), horizon: model.horizon() });
    }
    match cfg.kind {
        SolverKind::Pomcp | SolverKind::DbPomcp | SolverKind::RbPomcp => search::run(model, b0, cfg, observer),
        SolverKind::UdbFull => Ok(PlanOutput { result: udb::run(model, b0, cfg, observer)?, tree: None }),
        SolverKind::Exact => Ok(PlanOutput { result: exact_plan(model, b0)?, tree: None }),
    }
}

pub fn pomcp_plan(model: &TabularPomdp, b0: &Belief, cfg: &SolverConfig) -> Result<PlanResult, SolveError> {
    plan(model, b0, &SolverConfig { kind: SolverKind::Pomcp, ..cfg.clone() })
}

pub fn db_pomcp_plan(model: &TabularPomdp, b0: &Belief, cfg: &SolverConfig) -> Result<PlanResult, SolveError> {
    plan(model, b0, &SolverConfig { kind: SolverKind::DbPomcp, ..cfg.clone() })
}

pub fn rb_pomcp_plan(model: &TabularPomdp, b0: &Belief, cfg: &SolverConfig) -> Result<PlanResult, SolveError> {
    plan(model, b0, &SolverConfig { kind: SolverKind::RbPomcp, ..cfg.clone() })
}

fn exact_plan(model: &TabularPomdp, b0: &Belief) -> Result<PlanResult, SolveError> {
    let start = Instant::now();
    let sol = exact_optimal_value(model, b0)?;
    let action_intervals: Vec<_> = sol.q_values.iter().enumerate().map(|(a, &q)| (a, BoundInterval::point(q))).collect();
    let pruned = prune_decision(&action_intervals);
    Ok(PlanResult {
        chosen_action: sol.action,
        root_interval: BoundInterval::point(sol.value),
        certified_optimal: pruned.len() + 1 == model.num_actions(),
        iterations_used: 0,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        action_intervals,
        pruned,
    })
}
