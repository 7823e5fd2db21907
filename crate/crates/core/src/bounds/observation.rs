//! Bounds for a simplified observation space with exact beliefs.
//!
//! Only the observation branches selected by an [`ObservationSubset`] carry
//! probability mass. The simplified value sums rewards over retained branches
//! without renormalizing, and `ε` charges `R_max` for every unit of mass
//! missing at every later step.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::BoundConfig;
use crate::belief::{belief_reward, marginals_from_predicted, posterior_from_predicted, propagate, Belief};
use crate::error::OracleError;
use crate::model::{ActionId, ObsId, TabularPomdp};
use crate::oracle::PolicyTree;
use crate::trajectory::History;

/// Chooses which observation branches are retained.
///
/// `history` is the propagated history (relative to the evaluation root) that
/// ends with the action preceding `z`.
pub trait ObservationSubset {
    fn retains(&self, history: &History, z: ObsId) -> bool;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AllObservations;

#[derive(Clone, Copy, Debug, Default)]
pub struct NoObservations;

impl ObservationSubset for AllObservations {
    fn retains(&self, _: &History, _: ObsId) -> bool {
        true
    }
}

impl ObservationSubset for NoObservations {
    fn retains(&self, _: &History, _: ObsId) -> bool {
        false
    }
}

impl<F: Fn(&History, ObsId) -> bool> ObservationSubset for F {
    fn retains(&self, history: &History, z: ObsId) -> bool {
        self(history, z)
    }
}

/// Explicit per-history subsets with a fallback for unlisted histories.
#[derive(Clone, Debug, Default)]
pub struct ExplicitSubsets {
    pub sets: HashMap<History, BTreeSet<ObsId>>,
    pub retain_unlisted: bool,
}

impl ObservationSubset for ExplicitSubsets {
    fn retains(&self, history: &History, z: ObsId) -> bool {
        match self.sets.get(history) {
            Some(set) => set.contains(&z),
            None => self.retain_unlisted,
        }
    }
}

/// Simplified value of a policy together with its deterministic gap bound.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplifiedEval {
    /// Unnormalized sum of discounted rewards over retained branches.
    pub value: f64,
    /// Upper bound on `|V - value|`.
    pub epsilon: f64,
    /// Retained probability mass `k` steps after the root; `retained_mass[0] == 1`.
    pub retained_mass: Vec<f64>,
}

struct Walk<'a> {
    model: &'a TabularPomdp,
    zbar: &'a dyn ObservationSubset,
    value: f64,
    masses: Vec<f64>,
}

impl Walk<'_> {
    fn visit(
        &mut self,
        alpha: &[f64],
        action: ActionId,
        children: &BTreeMap<ObsId, PolicyTree>,
        history: &History,
        time: usize,
        depth: usize,
    ) -> Result<(), OracleError> {
        let m = self.model;
        let disc = m.discount().powi(depth as i32);
        self.value += disc * alpha.iter().enumerate().map(|(x, w)| w * m.reward(x, action)).sum::<f64>();
        if time >= m.horizon() {
            return Ok(());
        }
        let mut predicted = vec![0.0; m.num_states()];
        for (x, &w) in alpha.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (nx, t) in m.transition_row(x, action).iter().enumerate() {
                predicted[nx] += w * t;
            }
        }
        let h_minus = history.with_action(action);
        for z in 0..m.num_obs() {
            if !self.zbar.retains(&h_minus, z) {
                continue;
            }
            let next: Vec<f64> = predicted.iter().enumerate().map(|(x, p)| p * m.observation(x, z)).collect();
            let mass: f64 = next.iter().sum();
            if mass <= 0.0 {
                continue;
            }
            self.masses[depth + 1] += mass;
            let child_h = history.with_step(action, z);
            let child = children.get(&z).ok_or_else(|| OracleError::IncompletePolicy(child_h.clone()))?;
            self.visit(&next, child.action, &child.children, &child_h, time + 1, depth + 1)?;
        }
        Ok(())
    }
}

fn evaluate(
    model: &TabularPomdp,
    b: &Belief,
    first: ActionId,
    policy: &PolicyTree,
    zbar: &dyn ObservationSubset,
) -> Result<SimplifiedEval, OracleError> {
    let steps = model.horizon().saturating_sub(b.time());
    let mut walk = Walk { model, zbar, value: 0.0, masses: vec![0.0; steps + 1] };
    walk.masses[0] = 1.0;
    let alpha = b.to_dense(model.num_states());
    walk.visit(&alpha, first, &policy.children, &History::default(), b.time(), 0)?;
    let g = model.discount();
    let epsilon = model.r_max()
        * walk.masses.iter().enumerate().skip(1).map(|(k, m)| g.powi(k as i32) * (1.0 - m).max(0.0)).sum::<f64>();
    Ok(SimplifiedEval { value: walk.value, epsilon, retained_mass: walk.masses })
}

/// Simplified value and `ε^π(b)` for following `policy` from `b`.
pub fn simplified_value(
    model: &TabularPomdp,
    b: &Belief,
    policy: &PolicyTree,
    zbar: &dyn ObservationSubset,
) -> Result<SimplifiedEval, OracleError> {
    evaluate(model, b, policy.action, policy, zbar)
}

/// Simplified action value and `ε^π(b, a)`: take `a`, then follow the
/// subtrees of `policy`.
pub fn simplified_action_value(
    model: &TabularPomdp,
    b: &Belief,
    a: ActionId,
    policy: &PolicyTree,
    zbar: &dyn ObservationSubset,
) -> Result<SimplifiedEval, OracleError> {
    evaluate(model, b, a, policy, zbar)
}

pub fn epsilon_obs(
    model: &TabularPomdp,
    b: &Belief,
    policy: &PolicyTree,
    zbar: &dyn ObservationSubset,
) -> Result<f64, OracleError> {
    Ok(simplified_value(model, b, policy, zbar)?.epsilon)
}

pub fn epsilon_obs_action(
    model: &TabularPomdp,
    b: &Belief,
    a: ActionId,
    policy: &PolicyTree,
    zbar: &dyn ObservationSubset,
) -> Result<f64, OracleError> {
    Ok(simplified_action_value(model, b, a, policy, zbar)?.epsilon)
}

/// Upper deterministic bound: simplified action value plus its `ε`.
pub fn udb(
    model: &TabularPomdp,
    b: &Belief,
    a: ActionId,
    policy: &PolicyTree,
    zbar: &dyn ObservationSubset,
) -> Result<f64, OracleError> {
    let e = simplified_action_value(model, b, a, policy, zbar)?;
    Ok(e.value + e.epsilon)
}

/// The policy that is greedy with respect to its own UDB, with its values.
#[derive(Clone, Debug)]
pub struct UdbSolution {
    pub value: f64,
    pub action: ActionId,
    /// UDB of every action at the root.
    pub action_values: Vec<f64>,
    /// Greedy policy over retained, reachable branches.
    pub policy: PolicyTree,
}

/// Bellman optimality over the UDB. The returned value upper-bounds the
/// optimal value at `b`.
pub fn udb_greedy(model: &TabularPomdp, b: &Belief, zbar: &dyn ObservationSubset) -> UdbSolution {
    let cfg = BoundConfig::for_model(model);
    greedy(model, &cfg, b, &History::default(), zbar)
}

fn greedy(
    model: &TabularPomdp,
    cfg: &BoundConfig,
    b: &Belief,
    history: &History,
    zbar: &dyn ObservationSubset,
) -> UdbSolution {
    let mut action_values = Vec::with_capacity(model.num_actions());
    let mut best: Option<(f64, ActionId, BTreeMap<ObsId, PolicyTree>)> = None;
    for a in 0..model.num_actions() {
        let mut q = belief_reward(model, b, a);
        let mut children = BTreeMap::new();
        if b.time() < model.horizon() {
            let predicted = propagate(model, b, a);
            let h_minus = history.with_action(a);
            let mut kept = 0.0;
            let mut tail = 0.0;
            for (z, marginal) in marginals_from_predicted(model, &predicted).into_iter().enumerate() {
                if marginal <= 0.0 || !zbar.retains(&h_minus, z) {
                    continue;
                }
                let (post, marginal) = posterior_from_predicted(model, &predicted, z, b.time() + 1).expect("positive");
                let child = greedy(model, cfg, &post, &history.with_step(a, z), zbar);
                kept += marginal;
                tail += marginal * child.value;
                children.insert(z, child.policy);
            }
            tail += (1.0 - kept).max(0.0) * cfg.vmax(b.time() + 1);
            q += model.discount() * tail;
        }
        action_values.push(q);
        if best.as_ref().is_none_or(|(v, _, _)| q > *v) {
            best = Some((q, a, children));
        }
    }
    let (value, action, children) = best.expect("at least one action");
    UdbSolution { value, action, action_values, policy: PolicyTree { action, children } }
}
