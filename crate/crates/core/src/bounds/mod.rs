//! Deterministic value bounds.
//!
//! [`observation`] bounds the gap between a policy's value and its value under
//! a retained subset of observation branches (with exact beliefs).
//! [`root`] bounds the value at the planning root from an arbitrary
//! prefix-closed set of weighted state trajectories, either in closed form or
//! recursively over a search tree.
//!
//! All bound computations share one convention: `vmax(t)` / `vmin(t)` bound
//! the discounted sum of rewards collected from step `t` (inclusive) to the
//! last step `T`, and are zero past `T`.

use std::collections::BTreeSet;

use crate::error::BoundsError;
use crate::model::{ActionId, TabularPomdp};

pub mod observation;
pub mod root;

pub use observation::{
    epsilon_obs, epsilon_obs_action, simplified_action_value, simplified_value, udb, udb_greedy, AllObservations,
    ExplicitSubsets, NoObservations, ObservationSubset, SimplifiedEval, UdbSolution,
};
pub use root::{
    optimal_root_bounds, policy_view, root_action_intervals, root_bounds_closed, root_bounds_recursive, ActionView,
    HistoryView,
};

/// Slack below which an interval overlap is treated as an overlap.
pub const PRUNE_SLACK: f64 = 1e-12;

/// Closed interval `[lower, upper]` on a value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
}

impl BoundInterval {
    pub fn new(lower: f64, upper: f64) -> Self {
        debug_assert!(lower <= upper + 1e-9 * (1.0 + upper.abs()), "inverted interval [{lower}, {upper}]");
        BoundInterval { lower, upper }
    }

    pub fn point(v: f64) -> Self {
        BoundInterval { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lower - tol <= v && v <= self.upper + tol
    }
}

/// Per-step value-to-go bounds and the discount factor.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundConfig {
    // indexed by absolute time step 0..=T
    vmax: Vec<f64>,
    vmin: Vec<f64>,
    discount: f64,
}

impl BoundConfig {
    /// `vmax(t) = R_max · Σ_{i=0}^{T-t} γ^i`, `vmin = -vmax`: the reward bound
    /// times the number of remaining decision steps (discounted).
    pub fn for_model(model: &TabularPomdp) -> Self {
        let g = model.discount();
        let t_last = model.horizon();
        let mut vmax = vec![0.0; t_last + 1];
        let mut acc = 0.0;
        for t in (0..=t_last).rev() {
            acc = model.r_max() + g * acc;
            vmax[t] = acc;
        }
        let vmin = vmax.iter().map(|v| -v).collect();
        BoundConfig { vmax, vmin, discount: g }
    }

    /// Custom per-step bounds. Validity of every derived bound only requires
    /// `vmax(t)` (`vmin(t)`) to bound the true value-to-go from step `t` from
    /// above (below).
    pub fn from_fns(
        model: &TabularPomdp,
        vmax: impl Fn(usize) -> f64,
        vmin: impl Fn(usize) -> f64,
    ) -> Result<Self, BoundsError> {
        let vmax: Vec<f64> = (0..=model.horizon()).map(vmax).collect();
        let vmin: Vec<f64> = (0..=model.horizon()).map(vmin).collect();
        if let Some(t) = (0..vmax.len()).find(|&t| vmax[t] < vmin[t]) {
            return Err(BoundsError::Config(format!("vmax({t}) = {} < vmin({t}) = {}", vmax[t], vmin[t])));
        }
        Ok(BoundConfig { vmax, vmin, discount: model.discount() })
    }

    #[inline]
    pub fn vmax(&self, t: usize) -> f64 {
        self.vmax.get(t).copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn vmin(&self, t: usize) -> f64 {
        self.vmin.get(t).copied().unwrap_or(0.0)
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Last time step covered.
    pub fn horizon(&self) -> usize {
        self.vmax.len() - 1
    }
}

/// Actions whose upper bound falls below the best lower bound among all
/// actions. Never prunes every action.
pub fn prune_decision(intervals: &[(ActionId, BoundInterval)]) -> BTreeSet<ActionId> {
    let Some(&(best, best_iv)) = intervals.iter().max_by(|a, b| a.1.lower.total_cmp(&b.1.lower)) else {
        return BTreeSet::new();
    };
    let slack = PRUNE_SLACK * best_iv.lower.abs().max(1.0);
    let mut pruned: BTreeSet<ActionId> = intervals
        .iter()
        .filter(|(_, iv)| iv.upper + slack < best_iv.lower)
        .map(|(a, _)| *a)
        .collect();
    if pruned.len() == intervals.len() {
        pruned.remove(&best);
    }
    pruned
}
