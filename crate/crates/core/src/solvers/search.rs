//! Trajectory-sampling tree search shared by the POMCP family.

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;

use super::{best_by_lower, bound_config, Budget, Descent, Observer, PlanOutput, PlanResult, SolverConfig, SolverKind, TraceRow};
use crate::belief::Belief;
use crate::bounds::prune_decision;
use crate::error::SolveError;
use crate::model::{ActionId, ObsId, StateId, TabularPomdp};
use crate::rng::{sample_index, sample_pair, stream};
use crate::trajectory::{extend_fingerprint, root_fingerprint};
use crate::tree::{ActionIdx, BeliefTree, HistoryIdx, Member, ROOT};

const PLAN_STREAM: u64 = 0x706c_616e;

struct Search<'a> {
    model: &'a TabularPomdp,
    kind: SolverKind,
    descent: Descent,
    tree: BeliefTree,
    support: Vec<(StateId, f64)>,
    /// Exploration constant already scaled to the value range.
    c: f64,
    rng: ChaCha8Rng,
}

impl Search<'_> {
    fn allowed(&self, h: HistoryIdx, a: ActionId) -> bool {
        h != ROOT || self.kind == SolverKind::Pomcp || !self.tree.is_pruned(h, a)
    }

    fn select(&self, h: HistoryIdx) -> ActionId {
        let n = self.tree.num_actions();
        match self.kind {
            SolverKind::RbPomcp => {
                let mut best = (f64::NEG_INFINITY, 0);
                for a in (0..n).filter(|&a| self.allowed(h, a)) {
                    let u = self.tree.action_bounds_at(h, a).1;
                    if u > best.0 {
                        best = (u, a);
                    }
                }
                best.1
            }
            _ => self.uct(h),
        }
    }

    fn uct(&self, h: HistoryIdx) -> ActionId {
        let node = self.tree.history(h);
        let visits = |a| node.children.get(&a).map_or(0, |&ha| self.tree.action(ha).visits);
        let candidates: Vec<ActionId> = (0..self.tree.num_actions()).filter(|&a| self.allowed(h, a)).collect();
        if let Some(&a) = candidates.iter().find(|&&a| visits(a) == 0) {
            return a;
        }
        let log_n = (node.visits.max(1) as f64).ln();
        let mut best = (f64::NEG_INFINITY, candidates[0]);
        for &a in &candidates {
            let act = self.tree.action(node.children[&a]);
            let score = act.qmean + self.c * (log_n / act.visits as f64).sqrt();
            if score > best.0 {
                best = (score, a);
            }
        }
        best.1
    }

    /// One sampled trajectory from the root to the last step.
    fn descend_sampled(&mut self) -> Vec<(HistoryIdx, ActionIdx, f64)> {
        let m = self.model;
        let x0 = sample_pair(&self.support, &mut self.rng);
        let p0 = self.support.iter().find(|(x, _)| *x == x0).map_or(0.0, |p| p.1);
        let mut tau = Member::root(x0, p0);
        self.tree.add_root_member(tau);
        let mut h = ROOT;
        let mut steps = Vec::new();
        loop {
            let a = self.select(h);
            let ha = self.tree.ensure_action(h, a);
            steps.push((h, ha, m.reward(tau.state, a)));
            if self.tree.time_of(h) >= m.horizon() {
                self.tree.fwd_member(m, ha, tau, None);
                break;
            }
            let next = sample_index(m.transition_row(tau.state, a), &mut self.rng);
            let z = sample_index(m.observation_row(next), &mut self.rng);
            match self.tree.fwd_member(m, ha, tau, Some((z, next))) {
                Some((ext, child)) => {
                    tau = ext;
                    h = child;
                }
                None => break,
            }
        }
        steps
    }

    /// Root state for a guided descent: the most likely state not yet
    /// recorded at the root, else a recorded one.
    fn guided_root(&self) -> Member {
        let mut best: Option<(StateId, f64)> = None;
        for &(x, p) in &self.support {
            if !self.tree.history_has(ROOT, root_fingerprint(x)) && best.is_none_or(|b| p > b.1) {
                best = Some((x, p));
            }
        }
        match best {
            Some((x, p)) => Member::root(x, p),
            None => self.tree.members(ROOT)[0],
        }
    }

    /// Heaviest extension of `tau` through `ha` into `z` that is not recorded
    /// at the child, as `(next, weight)`.
    fn fresh_extension(&self, ha: ActionIdx, tau: Member, z: ObsId) -> Option<(StateId, f64)> {
        let m = self.model;
        let a = self.tree.action(ha).action;
        let child = self.tree.child(ha, z);
        let mut best: Option<(StateId, f64)> = None;
        for (next, &t) in m.transition_row(tau.state, a).iter().enumerate() {
            let w = tau.weight * t * m.observation(next, z);
            if w <= 0.0 || best.is_some_and(|b| w <= b.1) {
                continue;
            }
            let id = extend_fingerprint(tau.id, a, next, z);
            if !child.is_some_and(|c| self.tree.history_has(c, id)) {
                best = Some((next, w));
            }
        }
        best
    }

    /// One descent that always moves probability mass into the widest gap on
    /// the optimistic path: a missing action record, a missing observation
    /// branch, or the child with the widest interval. Returns the steps taken.
    fn descend_guided(&mut self) -> Vec<(HistoryIdx, ActionIdx, f64)> {
        let m = self.model;
        let cfg = self.tree.config().clone();
        let mut tau = self.guided_root();
        self.tree.add_root_member(tau);
        let mut h = ROOT;
        let mut steps = Vec::new();
        loop {
            let a = self.select(h);
            let ha = self.tree.ensure_action(h, a);
            if self.tree.action_has(ha, tau.id) {
                let missing = self.tree.members(h).iter().find(|x| !self.tree.action_has(ha, x.id)).copied();
                if let Some(x) = missing {
                    tau = x;
                }
            }
            steps.push((h, ha, m.reward(tau.state, a)));
            let t = self.tree.time_of(h);
            self.tree.fwd_member(m, ha, tau, None);
            if t >= m.horizon() {
                break;
            }
            let span = cfg.vmax(t + 1) - cfg.vmin(t + 1);
            let mut best: Option<(ObsId, f64, bool)> = None;
            for z in 0..m.num_obs() {
                let pot = self.tree.potential(ha, z);
                let (mass, width) = self.tree.child(ha, z).map_or((0.0, 0.0), |c| {
                    let n = self.tree.history(c);
                    (n.mass, n.upper - n.lower)
                });
                let open = pot - mass > 1e-12 * pot;
                let gap = if open { (pot - mass) * span } else { 0.0 } + width;
                if gap > 0.0 && best.is_none_or(|b| gap > b.1) {
                    best = Some((z, gap, open));
                }
            }
            let Some((z, _, open)) = best else { break };
            let fresh = if open {
                self.fresh_extension(ha, tau, z).map(|(x, _)| (tau, x)).or_else(|| {
                    let mut pick: Option<(Member, StateId, f64)> = None;
                    for &y in self.tree.action_members(ha) {
                        if let Some((x, w)) = self.fresh_extension(ha, y, z) {
                            if pick.is_none_or(|p| w > p.2) {
                                pick = Some((y, x, w));
                            }
                        }
                    }
                    pick.map(|(y, x, _)| (y, x))
                })
            } else {
                None
            };
            if let Some((from, next)) = fresh {
                match self.tree.fwd_member(m, ha, from, Some((z, next))) {
                    Some((ext, child)) => {
                        tau = ext;
                        h = child;
                        continue;
                    }
                    None => break,
                }
            }
            let Some(child) = self.tree.child(ha, z) else { break };
            tau = self.tree.members(child)[0];
            h = child;
        }
        steps
    }

    /// One iteration. Returns the visited histories, root first.
    fn simulate(&mut self) -> Vec<HistoryIdx> {
        let steps = match self.descent {
            Descent::Guided if self.kind == SolverKind::RbPomcp => self.descend_guided(),
            _ => self.descend_sampled(),
        };
        let g = self.model.discount();
        let mut ret = 0.0;
        let mut visited = Vec::with_capacity(steps.len());
        for &(h, ha, r) in steps.iter().rev() {
            ret = r + g * ret;
            self.tree.history_mut(h).visits += 1;
            let act = self.tree.action_mut(ha);
            act.visits += 1;
            act.qmean += (ret - act.qmean) / act.visits as f64;
            self.tree.bwd_update(ha);
            visited.push(h);
        }
        visited.reverse();
        visited
    }

    fn choose(&self) -> ActionId {
        let intervals = self.tree.node_intervals(ROOT);
        match self.kind {
            SolverKind::Pomcp => {
                let root = self.tree.history(ROOT);
                let mut best: Option<(f64, ActionId)> = None;
                for (&a, &ha) in &root.children {
                    let act = self.tree.action(ha);
                    if act.visits > 0 && best.is_none_or(|(q, _)| act.qmean > q) {
                        best = Some((act.qmean, a));
                    }
                }
                best.map_or(0, |(_, a)| a)
            }
            _ => best_by_lower(&intervals, |a| !self.tree.is_pruned(ROOT, a)),
        }
    }

    fn pruned(&self) -> BTreeSet<ActionId> {
        match self.kind {
            SolverKind::Pomcp => prune_decision(&self.tree.node_intervals(ROOT)),
            _ => self.tree.pruned_root_actions().into_iter().collect(),
        }
    }
}

pub(super) fn run(
    model: &TabularPomdp,
    b0: &Belief,
    cfg: &SolverConfig,
    mut observer: Option<Observer<'_>>,
) -> Result<PlanOutput, SolveError> {
    let budget = Budget::new(cfg);
    let bounds = bound_config(model, cfg);
    let c = cfg.uct_c * bounds.vmax(b0.time()).abs().max(bounds.vmin(b0.time()).abs());
    let mut tree = BeliefTree::new(b0.time(), model.num_actions(), bounds);
    tree.refresh_history(ROOT);
    let mut s = Search {
        model,
        kind: cfg.kind,
        descent: cfg.descent,
        tree,
        support: b0.iter().collect(),
        c,
        rng: stream(cfg.seed, PLAN_STREAM),
    };
    let mut iterations = 0;
    while !budget.exhausted(iterations) {
        if cfg.kind != SolverKind::Pomcp {
            let width = s.tree.root_interval().width();
            let unpruned = model.num_actions() - s.tree.pruned_root_actions().len();
            if width <= cfg.tolerance || (cfg.stop_on_certified && unpruned == 1) {
                break;
            }
        }
        let visited = s.simulate();
        iterations += 1;
        if cfg.kind != SolverKind::Pomcp {
            s.tree.prune_root();
        }
        if let Some(obs) = observer.as_mut() {
            for &h in &visited {
                let row = if h == ROOT {
                    let iv = s.tree.root_interval();
                    TraceRow { iter: iterations, node_depth: 0, mass: s.tree.history(ROOT).mass, upper: iv.upper, lower: iv.lower }
                } else {
                    let n = s.tree.history(h);
                    TraceRow { iter: iterations, node_depth: n.depth, mass: n.mass, upper: n.upper, lower: n.lower }
                };
                obs(&row);
            }
        }
    }
    let pruned = s.pruned();
    let chosen = s.choose();
    let certified = pruned.len() + 1 == model.num_actions() && !pruned.contains(&chosen);
    let result = PlanResult {
        chosen_action: chosen,
        root_interval: s.tree.root_interval(),
        certified_optimal: certified,
        iterations_used: iterations,
        wall_ms: budget.elapsed_ms(),
        action_intervals: s.tree.node_intervals(ROOT),
        pruned,
    };
    Ok(PlanOutput { result, tree: Some(s.tree) })
}

#[cfg(test)]
mod tests {
    use super::super::plan;
    use super::*;
    use crate::environments::{build_tiger, tiger, TigerParams};
    use crate::model::ModelTables;
    use crate::oracle::exact_optimal_value;

    fn tiger(h: usize) -> TabularPomdp {
        build_tiger(&TigerParams { horizon: h, ..Default::default() }).unwrap()
    }

    #[test]
    fn single_action_model() {
        let m = TabularPomdp::try_new(ModelTables {
            num_states: 1,
            num_actions: 1,
            num_obs: 1,
            horizon: 2,
            transition: vec![1.0],
            observation: vec![1.0],
            reward: vec![0.5],
            prior: vec![1.0],
            r_max: None,
            discount: 1.0,
        })
        .unwrap();
        let out = super::super::plan_with(&m, &Belief::prior(&m), &SolverConfig::new(SolverKind::Pomcp, 25, 3), None)
            .unwrap();
        assert_eq!(out.result.chosen_action, 0);
        let tree = out.tree.unwrap();
        let ha = tree.history(ROOT).children[&0];
        assert_eq!(tree.action(ha).visits, 25);
    }

    #[test]
    fn unvisited_actions_go_first() {
        let m = tiger(5);
        let out = super::super::plan_with(&m, &Belief::prior(&m), &SolverConfig::new(SolverKind::Pomcp, 3, 3), None)
            .unwrap();
        let tree = out.tree.unwrap();
        for a in 0..3 {
            assert_eq!(tree.action(tree.history(ROOT).children[&a]).visits, 1);
        }
    }

    #[test]
    fn zero_budget_gives_trivial_interval() {
        let m = tiger(3);
        let cfg = SolverConfig::new(SolverKind::RbPomcp, 0, 1);
        let r = plan(&m, &Belief::prior(&m), &cfg).unwrap();
        let bc = crate::bounds::BoundConfig::for_model(&m);
        assert_eq!((r.root_interval.lower, r.root_interval.upper), (bc.vmin(0), bc.vmax(0)));
        assert!(!r.certified_optimal);
    }

    #[test]
    fn rb_converges_on_small_tiger() {
        for h in 1..=3 {
            let m = tiger(h);
            let b = Belief::prior(&m);
            let best = exact_optimal_value(&m, &b).unwrap();
            let r = plan(&m, &b, &SolverConfig::new(SolverKind::RbPomcp, 100_000, 11)).unwrap();
            assert!(r.root_interval.width() <= 1e-9, "H={h}: {:?}", r.root_interval);
            assert!((r.root_interval.lower - best.value).abs() < 1e-6);
            assert_eq!(r.chosen_action, best.action);
        }
    }

    #[test]
    fn pomcp_listens_on_tiger() {
        let m = tiger(5);
        let r = plan(&m, &Belief::prior(&m), &SolverConfig::new(SolverKind::Pomcp, 10_000, 7)).unwrap();
        assert_eq!(r.chosen_action, tiger::LISTEN);
    }

    #[test]
    fn same_seed_same_result() {
        let m = tiger(4);
        let b = Belief::prior(&m);
        for kind in [SolverKind::Pomcp, SolverKind::DbPomcp, SolverKind::RbPomcp] {
            let cfg = SolverConfig::new(kind, 500, 9);
            let mut a = plan(&m, &b, &cfg).unwrap();
            let mut b2 = plan(&m, &b, &cfg).unwrap();
            a.wall_ms = 0.0;
            b2.wall_ms = 0.0;
            assert_eq!(a, b2);
        }
    }
}
