//! Bounds at the planning root from a prefix-closed set of weighted
//! trajectories.
//!
//! Every trajectory reaching a history contributes its weight to that
//! history's mass and `weight · r(x, a)` to the action it took there. Mass
//! that is missing at some step is charged `vmax` (or `vmin`) for the whole
//! remaining horizon.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::{BoundConfig, BoundInterval};
use crate::error::{BoundsError, OracleError};
use crate::model::{ActionId, ObsId, TabularPomdp};
use crate::oracle::PolicyTree;
use crate::trajectory::Trajectory;

/// Snapshot of a posterior history node.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryView {
    /// Absolute time step.
    pub time: usize,
    pub mass: f64,
    pub actions: BTreeMap<ActionId, ActionView>,
}

/// Snapshot of an action node below a history.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActionView {
    pub mass: f64,
    pub rbar: f64,
    pub children: BTreeMap<ObsId, HistoryView>,
}

fn policy_action(policy: &PolicyTree, tau: &Trajectory) -> Result<ActionId, BoundsError> {
    let obs = &tau.history.observations;
    for k in 0..obs.len() {
        let node = policy.node(&obs[..k]).ok_or_else(|| OracleError::IncompletePolicy(tau.history.clone()))?;
        if node.action != tau.history.actions[k] {
            return Err(BoundsError::PolicyMismatch(tau.id));
        }
    }
    let node = policy.node(obs).ok_or_else(|| OracleError::IncompletePolicy(tau.history.clone()))?;
    Ok(node.action)
}

/// Unique trajectories in input order, checked for prefix closure and for
/// following `policy`, paired with the action the policy takes at their end.
fn checked<'a>(
    model: &TabularPomdp,
    policy: &PolicyTree,
    retained: &'a [Trajectory],
) -> Result<Vec<(&'a Trajectory, ActionId)>, BoundsError> {
    let mut seen = HashSet::new();
    let unique: Vec<&Trajectory> = retained.iter().filter(|t| seen.insert(t.id)).collect();
    let roots: HashMap<usize, f64> =
        unique.iter().filter(|t| t.is_empty()).map(|t| (t.states[0], t.weight)).collect();
    for tau in &unique {
        if tau.is_empty() {
            continue;
        }
        let w0 = roots.get(&tau.states[0]).copied().ok_or(BoundsError::PrefixViolation(tau.id))?;
        let parent = tau.prefix(model, w0).expect("non-empty");
        if !seen.contains(&parent.id) {
            return Err(BoundsError::PrefixViolation(tau.id));
        }
    }
    unique.into_iter().map(|t| Ok((t, policy_action(policy, t)?))).collect()
}

/// Tree view of a retained set under a policy: each history holds the single
/// policy action.
pub fn policy_view(
    model: &TabularPomdp,
    root_time: usize,
    policy: &PolicyTree,
    retained: &[Trajectory],
) -> Result<HistoryView, BoundsError> {
    let mut root = HistoryView { time: root_time, ..Default::default() };
    let mut items = checked(model, policy, retained)?;
    items.sort_by_key(|(t, _)| t.len());
    for (tau, a) in items {
        let mut node = &mut root;
        for k in 0..tau.len() {
            let (ak, zk) = (tau.history.actions[k], tau.history.observations[k]);
            let time = node.time + 1;
            node = node
                .actions
                .entry(ak)
                .or_default()
                .children
                .entry(zk)
                .or_insert_with(|| HistoryView { time, ..Default::default() });
        }
        node.mass += tau.weight;
        let act = node.actions.entry(a).or_default();
        act.mass += tau.weight;
        act.rbar += tau.weight * model.reward(tau.last_state(), a);
    }
    Ok(root)
}

/// Bounds on `V^π(b_0)` in closed form: the simplified value plus slack for
/// the mass lost between consecutive steps.
pub fn root_bounds_closed(
    model: &TabularPomdp,
    root_time: usize,
    policy: &PolicyTree,
    retained: &[Trajectory],
    cfg: &BoundConfig,
) -> Result<BoundInterval, BoundsError> {
    let steps = model.horizon().saturating_sub(root_time);
    let mut mass = vec![0.0; steps + 1];
    let mut value = 0.0;
    let g = cfg.discount();
    for (tau, a) in checked(model, policy, retained)? {
        let k = tau.len();
        if k > steps {
            continue;
        }
        mass[k] += tau.weight;
        value += g.powi(k as i32) * tau.weight * model.reward(tau.last_state(), a);
    }
    let mut upper = value + cfg.vmax(root_time) * (1.0 - mass[0]);
    let mut lower = value + cfg.vmin(root_time) * (1.0 - mass[0]);
    for k in 0..steps {
        let gap = mass[k] - mass[k + 1];
        let d = g.powi(k as i32 + 1);
        upper += d * cfg.vmax(root_time + k + 1) * gap;
        lower += d * cfg.vmin(root_time + k + 1) * gap;
    }
    Ok(BoundInterval::new(lower, upper))
}

/// Partial bounds `(L(ha), U(ha))` of an action below a history of mass `parent_mass`.
fn action_bounds(
    h_time: usize,
    parent_mass: f64,
    act: &ActionView,
    cfg: &BoundConfig,
    node: &impl Fn(&HistoryView) -> Result<(f64, f64), BoundsError>,
) -> Result<(f64, f64), BoundsError> {
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut child_mass = 0.0;
    for child in act.children.values() {
        let (l, u) = node(child)?;
        lo += l;
        hi += u;
        child_mass += child.mass;
    }
    let g = cfg.discount();
    let lost = act.mass - child_mass;
    let upper = act.rbar
        + g * (hi + cfg.vmax(h_time + 1) * lost)
        + cfg.vmax(h_time) * (parent_mass - act.mass);
    let lower = act.rbar
        + g * (lo + cfg.vmin(h_time + 1) * lost)
        + cfg.vmin(h_time) * (parent_mass - act.mass);
    Ok((lower, upper))
}

fn policy_node(view: &HistoryView, cfg: &BoundConfig) -> Result<(f64, f64), BoundsError> {
    match view.actions.len() {
        0 => Ok((view.mass * cfg.vmin(view.time), view.mass * cfg.vmax(view.time))),
        1 => {
            let act = view.actions.values().next().expect("one action");
            action_bounds(view.time, view.mass, act, cfg, &|c| policy_node(c, cfg))
        }
        count => Err(BoundsError::NotAPolicy { time: view.time, count }),
    }
}

fn optimal_node(view: &HistoryView, num_actions: usize, cfg: &BoundConfig) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for a in 0..num_actions {
        let (l, u) = match view.actions.get(&a) {
            Some(act) => action_bounds(view.time, view.mass, act, cfg, &|c| Ok(optimal_node(c, num_actions, cfg)))
                .expect("optimal recursion is infallible"),
            None => (view.mass * cfg.vmin(view.time), view.mass * cfg.vmax(view.time)),
        };
        best = (best.0.max(l), best.1.max(u));
    }
    best
}

fn root_interval(view: &HistoryView, (l, u): (f64, f64), cfg: &BoundConfig) -> BoundInterval {
    let missing = 1.0 - view.mass;
    BoundInterval::new(l + cfg.vmin(view.time) * missing, u + cfg.vmax(view.time) * missing)
}

/// Recursive bounds on `V^π(b_0)` for a view holding at most one action per
/// history.
pub fn root_bounds_recursive(view: &HistoryView, cfg: &BoundConfig) -> Result<BoundInterval, BoundsError> {
    let lu = policy_node(view, cfg)?;
    Ok(root_interval(view, lu, cfg))
}

/// Bounds on `V*(b_0)`: the recursive form with a maximum over actions at
/// every history. Actions absent from the view count as fully unexplored.
pub fn optimal_root_bounds(view: &HistoryView, num_actions: usize, cfg: &BoundConfig) -> BoundInterval {
    root_interval(view, optimal_node(view, num_actions, cfg), cfg)
}

/// Bounds on `Q*(b_0, a)` for every root action.
pub fn root_action_intervals(
    view: &HistoryView,
    num_actions: usize,
    cfg: &BoundConfig,
) -> Vec<(ActionId, BoundInterval)> {
    let t = view.time;
    (0..num_actions)
        .map(|a| {
            let iv = match view.actions.get(&a) {
                Some(act) => {
                    let (l, u) = action_bounds(t, view.mass, act, cfg, &|c| Ok(optimal_node(c, num_actions, cfg)))
                        .expect("optimal recursion is infallible");
                    root_interval(view, (l, u), cfg)
                }
                None => BoundInterval::new(cfg.vmin(t), cfg.vmax(t)),
            };
            (a, iv)
        })
        .collect()
}
