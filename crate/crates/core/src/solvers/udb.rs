//! Full-belief search over growing observation subsets.
//!
//! Every node holds an exact belief and bounds for all actions. An action's
//! upper bound is its UDB: the retained children's values plus `vmax` for the
//! probability of every observation not yet retained. Each iteration follows
//! the best upper bound down the tree and either retains one more observation
//! (most likely first) or descends into the retained child with the widest
//! probability-weighted interval.

use std::collections::BTreeSet;

use super::{best_by_lower, bound_config, Budget, Observer, PlanResult, SolverConfig, TraceRow};
use crate::belief::{belief_reward, marginals_from_predicted, posterior_from_predicted, propagate, Belief};
use crate::bounds::{prune_decision, BoundConfig, BoundInterval};
use crate::error::{OracleError, SolveError};
use crate::model::{ActionId, ObsId, TabularPomdp};

/// Largest `|X|^2 · |A|` accepted for exact belief updates.
pub const BELIEF_LIMIT: f64 = 1e6;

struct ActionEntry {
    reward: f64,
    predicted: Vec<f64>,
    /// Observations with positive probability, most likely first.
    order: Vec<(ObsId, f64)>,
    children: Vec<usize>,
    lower: f64,
    upper: f64,
}

impl ActionEntry {
    fn unretained_mass(&self) -> f64 {
        self.order[self.children.len()..].iter().map(|(_, p)| p).sum()
    }
}

struct Node {
    belief: Belief,
    actions: Vec<ActionEntry>,
    lower: f64,
    upper: f64,
}

struct UdbSearch<'a> {
    model: &'a TabularPomdp,
    cfg: BoundConfig,
    nodes: Vec<Node>,
    pruned: BTreeSet<ActionId>,
}

impl UdbSearch<'_> {
    fn new_node(&mut self, belief: Belief) -> usize {
        let m = self.model;
        let t = belief.time();
        let actions = (0..m.num_actions())
            .map(|a| {
                let reward = belief_reward(m, &belief, a);
                let (predicted, order) = if t < m.horizon() {
                    let predicted = propagate(m, &belief, a);
                    let mut order: Vec<(ObsId, f64)> = marginals_from_predicted(m, &predicted)
                        .into_iter()
                        .enumerate()
                        .filter(|(_, p)| *p > 0.0)
                        .collect();
                    order.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
                    (predicted, order)
                } else {
                    (Vec::new(), Vec::new())
                };
                let mut e = ActionEntry { reward, predicted, order, children: Vec::new(), lower: 0.0, upper: 0.0 };
                self.refresh_action(&mut e, t);
                e
            })
            .collect();
        let mut node = Node { belief, actions, lower: 0.0, upper: 0.0 };
        refresh_node(&mut node);
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn refresh_action(&self, e: &mut ActionEntry, t: usize) {
        if t >= self.model.horizon() {
            e.lower = e.reward;
            e.upper = e.reward;
            return;
        }
        let (mut lo, mut hi) = (0.0, 0.0);
        for (k, &c) in e.children.iter().enumerate() {
            let p = e.order[k].1;
            lo += p * self.nodes[c].lower;
            hi += p * self.nodes[c].upper;
        }
        let rest = e.unretained_mass();
        let g = self.cfg.discount();
        e.upper = e.reward + g * (hi + rest * self.cfg.vmax(t + 1));
        e.lower = e.reward + g * (lo + rest * self.cfg.vmin(t + 1));
    }

    fn select(&self, n: usize, root: bool) -> ActionId {
        let node = &self.nodes[n];
        let mut best = (f64::NEG_INFINITY, 0);
        for (a, e) in node.actions.iter().enumerate() {
            if root && self.pruned.contains(&a) {
                continue;
            }
            if e.upper > best.0 {
                best = (e.upper, a);
            }
        }
        best.1
    }

    /// One expansion. Returns the visited `(node, path probability)` pairs, or
    /// `None` when the greedy path holds nothing left to expand.
    fn iterate(&mut self) -> Option<Vec<(usize, f64)>> {
        let mut n = 0;
        let mut prob = 1.0;
        let mut path: Vec<(usize, ActionId)> = Vec::new();
        let mut visited = vec![(0, 1.0)];
        let expanded = loop {
            let a = self.select(n, n == 0);
            path.push((n, a));
            let t = self.nodes[n].belief.time();
            let e = &self.nodes[n].actions[a];
            if t >= self.model.horizon() {
                break false;
            }
            let span = self.cfg.vmax(t + 1) - self.cfg.vmin(t + 1);
            let open_gap = e.unretained_mass() * span;
            let mut best_child: Option<(f64, usize, f64)> = None;
            for (k, &c) in e.children.iter().enumerate() {
                let p = e.order[k].1;
                let gap = p * (self.nodes[c].upper - self.nodes[c].lower);
                if best_child.is_none_or(|(g, _, _)| gap > g) {
                    best_child = Some((gap, c, p));
                }
            }
            let child_gap = best_child.map_or(0.0, |b| b.0);
            if e.children.len() < e.order.len() && open_gap >= child_gap {
                let (z, _) = e.order[e.children.len()];
                let (post, p) = posterior_from_predicted(self.model, &e.predicted, z, t + 1).expect("positive");
                let c = self.new_node(post);
                self.nodes[n].actions[a].children.push(c);
                visited.push((c, prob * p));
                break true;
            }
            match best_child {
                Some((gap, c, p)) if gap > 0.0 => {
                    n = c;
                    prob *= p;
                    visited.push((c, prob));
                }
                _ => break false,
            }
        };
        for &(n, a) in path.iter().rev() {
            let t = self.nodes[n].belief.time();
            let mut e = std::mem::replace(&mut self.nodes[n].actions[a], placeholder());
            self.refresh_action(&mut e, t);
            self.nodes[n].actions[a] = e;
            refresh_node(&mut self.nodes[n]);
        }
        expanded.then_some(visited)
    }

    fn prune(&mut self) {
        let mut pruned = prune_decision(&self.intervals());
        pruned.extend(self.pruned.iter().copied());
        if pruned.len() < self.model.num_actions() {
            self.pruned = pruned;
        }
    }

    fn intervals(&self) -> Vec<(ActionId, BoundInterval)> {
        self.nodes[0].actions.iter().enumerate().map(|(a, e)| (a, BoundInterval::new(e.lower, e.upper))).collect()
    }
}

fn placeholder() -> ActionEntry {
    ActionEntry { reward: 0.0, predicted: Vec::new(), order: Vec::new(), children: Vec::new(), lower: 0.0, upper: 0.0 }
}

fn refresh_node(node: &mut Node) {
    node.lower = node.actions.iter().map(|e| e.lower).fold(f64::NEG_INFINITY, f64::max);
    node.upper = node.actions.iter().map(|e| e.upper).fold(f64::NEG_INFINITY, f64::max);
}

pub(super) fn run(
    model: &TabularPomdp,
    b0: &Belief,
    cfg: &SolverConfig,
    mut observer: Option<Observer<'_>>,
) -> Result<PlanResult, SolveError> {
    let size = (model.num_states() as f64).powi(2) * model.num_actions() as f64;
    if size > BELIEF_LIMIT {
        return Err(OracleError::TooLarge { branches: size, limit: BELIEF_LIMIT }.into());
    }
    let budget = Budget::new(cfg);
    let mut s = UdbSearch { model, cfg: bound_config(model, cfg), nodes: Vec::new(), pruned: BTreeSet::new() };
    s.new_node(b0.clone());
    s.prune();
    let mut iterations = 0;
    while !budget.exhausted(iterations) {
        let root = &s.nodes[0];
        let certified = s.pruned.len() + 1 == model.num_actions();
        if root.upper - root.lower <= cfg.tolerance || (cfg.stop_on_certified && certified) {
            break;
        }
        let Some(visited) = s.iterate() else { break };
        iterations += 1;
        s.prune();
        if let Some(obs) = observer.as_mut() {
            for (n, p) in visited {
                let node = &s.nodes[n];
                obs(&TraceRow {
                    iter: iterations,
                    node_depth: node.belief.time() - b0.time(),
                    mass: p,
                    upper: node.upper,
                    lower: node.lower,
                });
            }
        }
    }
    let intervals = s.intervals();
    let chosen = best_by_lower(&intervals, |a| !s.pruned.contains(&a));
    let root = &s.nodes[0];
    Ok(PlanResult {
        chosen_action: chosen,
        root_interval: BoundInterval::new(root.lower, root.upper),
        certified_optimal: s.pruned.len() + 1 == model.num_actions(),
        iterations_used: iterations,
        wall_ms: budget.elapsed_ms(),
        action_intervals: intervals,
        pruned: s.pruned,
    })
}

/// Plans with the full-belief solver regardless of the kind set in `cfg`.
pub fn udb_full_belief_plan(model: &TabularPomdp, b0: &Belief, cfg: &SolverConfig) -> Result<PlanResult, SolveError> {
    super::plan(model, b0, &SolverConfig { kind: super::SolverKind::UdbFull, ..cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{build_tiger, TigerParams};
    use crate::model::ModelTables;
    use crate::oracle::exact_optimal_value;
    use crate::solvers::SolverKind;

    #[test]
    fn converges_to_oracle_on_tiger() {
        for h in 1..=4 {
            let m = build_tiger(&TigerParams { horizon: h, ..Default::default() }).unwrap();
            let b = Belief::prior(&m);
            let best = exact_optimal_value(&m, &b).unwrap();
            let r = udb_full_belief_plan(&m, &b, &SolverConfig::new(SolverKind::UdbFull, 1_000_000, 0)).unwrap();
            assert!(r.root_interval.width() <= 1e-9);
            assert!((r.root_interval.upper - best.value).abs() < 1e-9);
            assert_eq!(r.chosen_action, best.action);
            assert!(r.certified_optimal);
        }
    }

    #[test]
    fn one_observation_model_is_plain_value_iteration() {
        // two states, a coin that can be kept or flipped, nothing observed
        let m = TabularPomdp::try_new(ModelTables {
            num_states: 2,
            num_actions: 2,
            num_obs: 1,
            horizon: 3,
            transition: vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0],
            observation: vec![1.0, 1.0],
            reward: vec![1.0, 0.0, -1.0, 0.5],
            prior: vec![0.3, 0.7],
            r_max: None,
            discount: 0.9,
        })
        .unwrap();
        let b = Belief::prior(&m);
        let best = exact_optimal_value(&m, &b).unwrap();
        let r = udb_full_belief_plan(&m, &b, &SolverConfig::new(SolverKind::UdbFull, 1000, 0)).unwrap();
        assert!((r.root_interval.lower - best.value).abs() < 1e-12);
        assert!((r.root_interval.upper - best.value).abs() < 1e-12);
    }

    #[test]
    fn refuses_large_models() {
        let m = crate::environments::EnvKind::RockSample.build(Some(2)).unwrap();
        let big = m.num_states() as f64;
        if big * big * m.num_actions() as f64 > BELIEF_LIMIT {
            assert!(udb_full_belief_plan(&m, &Belief::prior(&m), &SolverConfig::new(SolverKind::UdbFull, 1, 0)).is_err());
        }
    }
}
