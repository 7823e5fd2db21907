//! Brute-force exact solver and policy evaluator over the full belief tree.
//!
//! This is a test instrument: every expansion is exhaustive and guarded by
//! [`BRANCH_LIMIT`].

use std::collections::BTreeMap;

use rand::Rng;

use crate::belief::{belief_reward, marginals_from_predicted, posterior_from_predicted, propagate, Belief};
use crate::error::OracleError;
use crate::model::{ActionId, ObsId, TabularPomdp};
use crate::trajectory::{History, Trajectory};

/// Upper limit on belief-tree nodes the oracle will expand.
pub const BRANCH_LIMIT: f64 = 1e6;

/// A conditional plan: the action at this history and one subtree per observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyTree {
    pub action: ActionId,
    pub children: BTreeMap<ObsId, PolicyTree>,
}

impl PolicyTree {
    pub fn leaf(action: ActionId) -> Self {
        PolicyTree { action, children: BTreeMap::new() }
    }

    /// The same action at every history for `depth` more steps, branching on
    /// every observation.
    pub fn constant(action: ActionId, depth: usize, num_obs: usize) -> Self {
        let children = if depth == 0 {
            BTreeMap::new()
        } else {
            (0..num_obs).map(|z| (z, PolicyTree::constant(action, depth - 1, num_obs))).collect()
        };
        PolicyTree { action, children }
    }

    /// Uniformly random actions over a complete tree of the given depth.
    pub fn random<R: Rng + ?Sized>(num_actions: usize, num_obs: usize, depth: usize, rng: &mut R) -> Self {
        let action = rng.random_range(0..num_actions);
        let children = if depth == 0 {
            BTreeMap::new()
        } else {
            (0..num_obs).map(|z| (z, PolicyTree::random(num_actions, num_obs, depth - 1, rng))).collect()
        };
        PolicyTree { action, children }
    }

    /// Follows `observations` from the root.
    pub fn node(&self, observations: &[ObsId]) -> Option<&PolicyTree> {
        observations.iter().try_fold(self, |node, z| node.children.get(z))
    }

    /// Number of steps covered below this node along its deepest branch.
    pub fn depth(&self) -> usize {
        self.children.values().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }
}

/// Result of the exact optimal solver at one belief.
#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub value: f64,
    pub action: ActionId,
    pub policy: PolicyTree,
    /// `Q*(b, a)` for every action.
    pub q_values: Vec<f64>,
}

impl OracleSolution {
    /// Gap between the best and second-best action values; infinite for a
    /// single-action model.
    pub fn optimality_margin(&self) -> f64 {
        let mut q = self.q_values.clone();
        q.sort_by(|a, b| b.total_cmp(a));
        if q.len() < 2 {
            f64::INFINITY
        } else {
            q[0] - q[1]
        }
    }
}

fn branch_count(model: &TabularPomdp, time: usize) -> f64 {
    let per_level = (model.num_actions() * model.num_obs()) as f64;
    let levels = model.horizon().saturating_sub(time);
    (0..=levels).map(|k| per_level.powi(k as i32)).sum()
}

fn guard(model: &TabularPomdp, time: usize) -> Result<(), OracleError> {
    let branches = branch_count(model, time);
    if branches > BRANCH_LIMIT {
        return Err(OracleError::TooLarge { branches, limit: BRANCH_LIMIT });
    }
    Ok(())
}

/// Whether the oracle accepts a belief at `time` for this model.
pub fn oracle_feasible(model: &TabularPomdp, time: usize) -> bool {
    guard(model, time).is_ok()
}

/// `V*(b)` by exhaustive Bellman recursion; ties go to the lowest action id.
pub fn exact_optimal_value(model: &TabularPomdp, b: &Belief) -> Result<OracleSolution, OracleError> {
    guard(model, b.time())?;
    Ok(solve(model, b))
}

fn solve(model: &TabularPomdp, b: &Belief) -> OracleSolution {
    let mut best: Option<(f64, ActionId, BTreeMap<ObsId, PolicyTree>)> = None;
    let mut q_values = Vec::with_capacity(model.num_actions());
    for a in 0..model.num_actions() {
        let mut q = belief_reward(model, b, a);
        let mut children = BTreeMap::new();
        if b.time() < model.horizon() {
            let predicted = propagate(model, b, a);
            for (z, marginal) in marginals_from_predicted(model, &predicted).into_iter().enumerate() {
                if marginal <= 0.0 {
                    continue;
                }
                let (post, marginal) = posterior_from_predicted(model, &predicted, z, b.time() + 1)
                    .expect("positive marginal");
                let child = solve(model, &post);
                q += model.discount() * marginal * child.value;
                children.insert(z, child.policy);
            }
        }
        q_values.push(q);
        if best.as_ref().is_none_or(|(v, _, _)| q > *v) {
            best = Some((q, a, children));
        }
    }
    let (value, action, children) = best.expect("at least one action");
    OracleSolution { value, action, policy: PolicyTree { action, children }, q_values }
}

/// `V^π(b)` by full expansion of the policy tree.
pub fn exact_policy_value(model: &TabularPomdp, b: &Belief, policy: &PolicyTree) -> Result<f64, OracleError> {
    guard(model, b.time())?;
    policy_value(model, b, policy, &History::default())
}

/// `Q^π(b, a)`: take `a` now, then follow the subtrees of `policy`.
pub fn exact_action_value(
    model: &TabularPomdp,
    b: &Belief,
    a: ActionId,
    policy: &PolicyTree,
) -> Result<f64, OracleError> {
    guard(model, b.time())?;
    let replaced = PolicyTree { action: a, children: policy.children.clone() };
    policy_value(model, b, &replaced, &History::default())
}

fn policy_value(model: &TabularPomdp, b: &Belief, policy: &PolicyTree, h: &History) -> Result<f64, OracleError> {
    let a = policy.action;
    let mut v = belief_reward(model, b, a);
    if b.time() >= model.horizon() {
        return Ok(v);
    }
    let predicted = propagate(model, b, a);
    for (z, marginal) in marginals_from_predicted(model, &predicted).into_iter().enumerate() {
        if marginal <= 0.0 {
            continue;
        }
        let child_h = h.with_step(a, z);
        let child = policy.children.get(&z).ok_or_else(|| OracleError::IncompletePolicy(child_h.clone()))?;
        let (post, marginal) = posterior_from_predicted(model, &predicted, z, b.time() + 1).expect("positive marginal");
        v += model.discount() * marginal * policy_value(model, &post, child, &child_h)?;
    }
    Ok(v)
}

/// All positive-probability trajectories under `policy` from `b`, up to
/// `t_max` transitions (clamped at the horizon), shortest first. The paired
/// value is `P^π(τ)`, which equals the trajectory weight.
pub fn enumerate_trajectories(
    model: &TabularPomdp,
    b: &Belief,
    policy: &PolicyTree,
    t_max: usize,
) -> Result<Vec<(Trajectory, f64)>, OracleError> {
    let steps = t_max.min(model.horizon().saturating_sub(b.time()));
    let mut frontier: Vec<(Trajectory, &PolicyTree)> =
        b.iter().map(|(x, p)| (Trajectory::root(x, p), policy)).collect();
    let mut out: Vec<(Trajectory, f64)> = frontier.iter().map(|(t, _)| (t.clone(), t.weight)).collect();
    for _ in 0..steps {
        let mut next = Vec::new();
        for (tau, node) in &frontier {
            let a = node.action;
            let x = tau.last_state();
            for (nx, &t) in model.transition_row(x, a).iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                for (z, &o) in model.observation_row(nx).iter().enumerate() {
                    if o == 0.0 {
                        continue;
                    }
                    let mut ext = tau.clone();
                    ext.extend_in_place(model, a, z, nx);
                    let child = node
                        .children
                        .get(&z)
                        .ok_or_else(|| OracleError::IncompletePolicy(ext.history.clone()))?;
                    next.push((ext, child));
                }
            }
        }
        if (out.len() + next.len()) as f64 > BRANCH_LIMIT {
            return Err(OracleError::TooLarge { branches: (out.len() + next.len()) as f64, limit: BRANCH_LIMIT });
        }
        out.extend(next.iter().map(|(t, _)| (t.clone(), t.weight)));
        frontier = next;
    }
    Ok(out)
}

/// Number of positive-weight full-length trajectories over every action
/// sequence from `b`.
pub fn count_positive_trajectories(model: &TabularPomdp, b: &Belief) -> u64 {
    fn count(model: &TabularPomdp, x: usize, steps_left: usize) -> u64 {
        if steps_left == 0 {
            return 1;
        }
        let mut n = 0;
        for a in 0..model.num_actions() {
            for (nx, &t) in model.transition_row(x, a).iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                let obs = model.observation_row(nx).iter().filter(|o| **o > 0.0).count() as u64;
                n += obs * count(model, nx, steps_left - 1);
            }
        }
        n
    }
    let steps = model.horizon().saturating_sub(b.time());
    b.iter().map(|(x, _)| count(model, x, steps)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{build_tiger, tiger, TigerParams};
    use crate::model::ModelTables;

    fn tiger_h(h: usize) -> TabularPomdp {
        build_tiger(&TigerParams { horizon: h, ..Default::default() }).unwrap()
    }

    #[test]
    fn last_step_is_greedy() {
        let m = tiger_h(3);
        let b = Belief::from_dense(&[0.9, 0.1], 2);
        let sol = exact_optimal_value(&m, &b).unwrap();
        let greedy = (0..3).map(|a| belief_reward(&m, &b, a)).fold(f64::MIN, f64::max);
        assert_eq!(sol.value, greedy);
        assert!(sol.policy.children.is_empty());
    }

    #[test]
    fn tiger_single_step_listens() {
        let m = tiger_h(1);
        let sol = exact_optimal_value(&m, &Belief::prior(&m)).unwrap();
        assert_eq!(sol.value, -1.0);
        assert_eq!(sol.action, tiger::LISTEN);
        assert_eq!(sol.q_values, vec![-45.0, -45.0, -1.0]);
    }

    #[test]
    fn zero_reward_model_has_zero_value() {
        let mut t = tiger_h(4).tables();
        t.reward.iter_mut().for_each(|r| *r = 0.0);
        t.r_max = Some(0.0);
        let m = TabularPomdp::try_new(ModelTables { ..t }).unwrap();
        let sol = exact_optimal_value(&m, &Belief::prior(&m)).unwrap();
        assert_eq!(sol.value, 0.0);
        // lowest id wins every tie
        assert_eq!(sol.action, 0);
    }

    #[test]
    fn fixed_policies() {
        let m = tiger_h(1);
        let b = Belief::prior(&m);
        assert_eq!(exact_policy_value(&m, &b, &PolicyTree::leaf(tiger::OPEN_LEFT)).unwrap(), -45.0);
        let m = tiger_h(2);
        let listen = PolicyTree::constant(tiger::LISTEN, 1, 2);
        assert!((exact_policy_value(&m, &b, &listen).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_tree_evaluates_to_optimal_value() {
        let m = tiger_h(4);
        let b = Belief::prior(&m);
        let sol = exact_optimal_value(&m, &b).unwrap();
        let v = exact_policy_value(&m, &b, &sol.policy).unwrap();
        assert!((v - sol.value).abs() < 1e-12);
    }

    #[test]
    fn missing_branch_is_reported() {
        let m = tiger_h(2);
        let err = exact_policy_value(&m, &Belief::prior(&m), &PolicyTree::leaf(tiger::LISTEN)).unwrap_err();
        assert!(matches!(err, OracleError::IncompletePolicy(h) if h.actions == vec![tiger::LISTEN]));
    }

    #[test]
    fn listen_twice_has_eight_trajectories() {
        let m = tiger_h(3);
        let b = Belief::prior(&m);
        let trajs = enumerate_trajectories(&m, &b, &PolicyTree::constant(tiger::LISTEN, 2, 2), 2).unwrap();
        let at2: Vec<_> = trajs.iter().filter(|(t, _)| t.len() == 2).collect();
        assert_eq!(at2.len(), 8);
        for k in 0..=2 {
            let s: f64 = trajs.iter().filter(|(t, _)| t.len() == k).map(|(_, p)| p).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_model_single_trajectory() {
        let m = build_tiger(&TigerParams { listen_accuracy: 1.0, horizon: 4, ..Default::default() }).unwrap();
        let b = Belief::point(tiger::TIGER_LEFT, 0);
        let trajs = enumerate_trajectories(&m, &b, &PolicyTree::constant(tiger::LISTEN, 3, 2), 3).unwrap();
        let full: Vec<_> = trajs.iter().filter(|(t, _)| t.len() == 3).collect();
        assert_eq!(full.len(), 1);
        assert_eq!(full[0].1, 1.0);
    }

    #[test]
    fn guard_trips() {
        let m = tiger_h(12);
        assert!(matches!(exact_optimal_value(&m, &Belief::prior(&m)), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn tiger_trajectory_count() {
        // listen keeps the state (2 obs), opening resets it (2 states x 2 obs)
        let m = tiger_h(2);
        assert_eq!(count_positive_trajectories(&m, &Belief::prior(&m)), 2 * (2 + 4 + 4));
    }
}
