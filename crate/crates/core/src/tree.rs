//! Search tree of histories and actions with trajectory bookkeeping.
//!
//! Nodes live in two arenas and refer to each other by index. A history node
//! at depth `d` sits at absolute time `root_time + d`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use crate::bounds::{prune_decision, ActionView, BoundConfig, BoundInterval, HistoryView};
use crate::model::{ActionId, ObsId, StateId, TabularPomdp};
use crate::trajectory::{extend_fingerprint, root_fingerprint, Trajectory};

/// A recorded trajectory, reduced to what is needed to extend it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Member {
    pub id: u64,
    pub state: StateId,
    pub weight: f64,
}

impl Member {
    pub fn of(tau: &Trajectory) -> Self {
        Member { id: tau.id, state: tau.last_state(), weight: tau.weight }
    }

    pub fn root(x0: StateId, weight: f64) -> Self {
        Member { id: root_fingerprint(x0), state: x0, weight }
    }

    /// Same arithmetic as [`Trajectory::extend_in_place`].
    pub fn extend(self, model: &TabularPomdp, a: ActionId, z: ObsId, next: StateId) -> Self {
        Member {
            id: extend_fingerprint(self.id, a, next, z),
            state: next,
            weight: self.weight * model.observation(next, z) * model.transition(self.state, a, next),
        }
    }
}

pub type HistoryIdx = usize;
pub type ActionIdx = usize;

#[derive(Clone, Debug)]
pub struct HistoryNode {
    pub depth: usize,
    pub mass: f64,
    traj_ids: HashSet<u64>,
    members: Vec<Member>,
    pub children: BTreeMap<ActionId, ActionIdx>,
    /// Parent action node and the observation leading here.
    pub parent: Option<(ActionIdx, ObsId)>,
    pub upper: f64,
    pub lower: f64,
    pub visits: u64,
}

#[derive(Clone, Debug)]
pub struct ActionNode {
    pub action: ActionId,
    pub parent: HistoryIdx,
    pub mass: f64,
    pub rbar: f64,
    traj_ids: HashSet<u64>,
    members: Vec<Member>,
    /// `Σ_τ P̄(τ) · P(z | x_τ, a)` over recorded trajectories, per observation:
    /// the mass each child would hold if every extension were recorded.
    potential: Vec<f64>,
    pub children: BTreeMap<ObsId, HistoryIdx>,
    /// Bounds on the contribution of the trajectories that took this action,
    /// excluding the parent's mass deficit.
    pub sub_upper: f64,
    pub sub_lower: f64,
    pub visits: u64,
    pub qmean: f64,
    pub pruned: bool,
}

#[derive(Clone, Debug)]
pub struct BeliefTree {
    histories: Vec<HistoryNode>,
    actions: Vec<ActionNode>,
    root_time: usize,
    num_actions: usize,
    cfg: BoundConfig,
}

pub const ROOT: HistoryIdx = 0;

impl BeliefTree {
    pub fn new(root_time: usize, num_actions: usize, cfg: BoundConfig) -> Self {
        let root = HistoryNode {
            depth: 0,
            mass: 0.0,
            traj_ids: HashSet::new(),
            members: Vec::new(),
            children: BTreeMap::new(),
            parent: None,
            upper: 0.0,
            lower: 0.0,
            visits: 0,
        };
        BeliefTree { histories: vec![root], actions: Vec::new(), root_time, num_actions, cfg }
    }

    pub fn config(&self) -> &BoundConfig {
        &self.cfg
    }

    pub fn root_time(&self) -> usize {
        self.root_time
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn history(&self, h: HistoryIdx) -> &HistoryNode {
        &self.histories[h]
    }

    pub fn action(&self, ha: ActionIdx) -> &ActionNode {
        &self.actions[ha]
    }

    pub fn action_mut(&mut self, ha: ActionIdx) -> &mut ActionNode {
        &mut self.actions[ha]
    }

    pub fn history_mut(&mut self, h: HistoryIdx) -> &mut HistoryNode {
        &mut self.histories[h]
    }

    pub fn num_history_nodes(&self) -> usize {
        self.histories.len()
    }

    pub fn time_of(&self, h: HistoryIdx) -> usize {
        self.root_time + self.histories[h].depth
    }

    /// Records a root trajectory; returns whether it was new.
    pub fn add_root(&mut self, tau: &Trajectory) -> bool {
        debug_assert!(tau.is_empty());
        self.add_root_member(Member::of(tau))
    }

    pub fn add_root_member(&mut self, tau: Member) -> bool {
        let root = &mut self.histories[ROOT];
        let fresh = root.traj_ids.insert(tau.id);
        if fresh {
            root.mass += tau.weight;
            root.members.push(tau);
            self.refresh_history(ROOT);
        }
        fresh
    }

    /// Whether trajectory `id` is recorded at `h`.
    pub fn history_has(&self, h: HistoryIdx, id: u64) -> bool {
        self.histories[h].traj_ids.contains(&id)
    }

    /// Trajectories recorded at `h`, in recording order.
    pub fn members(&self, h: HistoryIdx) -> &[Member] {
        &self.histories[h].members
    }

    /// Trajectories recorded at `ha`, in recording order.
    pub fn action_members(&self, ha: ActionIdx) -> &[Member] {
        &self.actions[ha].members
    }

    pub fn action_has(&self, ha: ActionIdx, id: u64) -> bool {
        self.actions[ha].traj_ids.contains(&id)
    }

    /// Mass the child of `ha` under `z` would hold with every extension of
    /// the recorded trajectories present.
    pub fn potential(&self, ha: ActionIdx, z: ObsId) -> f64 {
        self.actions[ha].potential.get(z).copied().unwrap_or(0.0)
    }

    /// Child of `ha` reached by `z`, if any.
    pub fn child(&self, ha: ActionIdx, z: ObsId) -> Option<HistoryIdx> {
        self.actions[ha].children.get(&z).copied()
    }

    /// Action node for `a` below `h`, created on first use.
    pub fn ensure_action(&mut self, h: HistoryIdx, a: ActionId) -> ActionIdx {
        if let Some(&ha) = self.histories[h].children.get(&a) {
            return ha;
        }
        let ha = self.actions.len();
        self.actions.push(ActionNode {
            action: a,
            parent: h,
            mass: 0.0,
            rbar: 0.0,
            traj_ids: HashSet::new(),
            members: Vec::new(),
            potential: Vec::new(),
            children: BTreeMap::new(),
            sub_upper: 0.0,
            sub_lower: 0.0,
            visits: 0,
            qmean: 0.0,
            pruned: false,
        });
        self.histories[h].children.insert(a, ha);
        ha
    }

    fn ensure_child(&mut self, ha: ActionIdx, z: ObsId) -> HistoryIdx {
        if let Some(&c) = self.actions[ha].children.get(&z) {
            return c;
        }
        let depth = self.histories[self.actions[ha].parent].depth + 1;
        let c = self.histories.len();
        self.histories.push(HistoryNode {
            depth,
            mass: 0.0,
            traj_ids: HashSet::new(),
            members: Vec::new(),
            children: BTreeMap::new(),
            parent: Some((ha, z)),
            upper: 0.0,
            lower: 0.0,
            visits: 0,
        });
        self.actions[ha].children.insert(z, c);
        c
    }

    /// Pushes `tau` (which reaches `ha`'s parent) through `ha`, extends it by
    /// `(z, next)` when a step is given, and records the extension at the
    /// child history. Returns the extended trajectory and the child, or
    /// `None` when no step is given or the extension has zero weight.
    pub fn fwd_update(
        &mut self,
        model: &TabularPomdp,
        ha: ActionIdx,
        tau: &Trajectory,
        step: Option<(ObsId, StateId)>,
    ) -> Option<(Trajectory, HistoryIdx)> {
        let (_, child) = self.fwd_member(model, ha, Member::of(tau), step)?;
        let (z, next) = step?;
        let mut ext = tau.clone();
        ext.extend_in_place(model, self.actions[ha].action, z, next);
        Some((ext, child))
    }

    /// [`fwd_update`](Self::fwd_update) on the reduced form of a trajectory.
    pub fn fwd_member(
        &mut self,
        model: &TabularPomdp,
        ha: ActionIdx,
        tau: Member,
        step: Option<(ObsId, StateId)>,
    ) -> Option<(Member, HistoryIdx)> {
        let a = self.actions[ha].action;
        let below_horizon = self.time_of(self.actions[ha].parent) < model.horizon();
        let node = &mut self.actions[ha];
        if node.traj_ids.insert(tau.id) {
            node.mass += tau.weight;
            node.rbar += tau.weight * model.reward(tau.state, a);
            node.members.push(tau);
            if below_horizon {
                node.potential.resize(model.num_obs(), 0.0);
                for (next, &t) in model.transition_row(tau.state, a).iter().enumerate() {
                    if t > 0.0 {
                        for (z, &o) in model.observation_row(next).iter().enumerate() {
                            node.potential[z] += tau.weight * t * o;
                        }
                    }
                }
            }
        }
        let (z, next) = step?;
        let ext = tau.extend(model, a, z, next);
        if ext.weight <= 0.0 {
            return None;
        }
        let child = self.ensure_child(ha, z);
        let hnode = &mut self.histories[child];
        if hnode.traj_ids.insert(ext.id) {
            hnode.mass += ext.weight;
            hnode.members.push(ext);
            self.refresh_history(child);
        }
        Some((ext, child))
    }

    /// Records every prefix of `tau` along its history, optionally takes
    /// `final_action` at its last history, and refreshes the bounds on the
    /// path. `root_weight` is the belief mass of `tau`'s first state.
    pub fn insert(&mut self, model: &TabularPomdp, tau: &Trajectory, root_weight: f64, final_action: Option<ActionId>) {
        let mut cur = Member::root(tau.states[0], root_weight);
        self.add_root_member(cur);
        let mut h = ROOT;
        let mut path = Vec::with_capacity(tau.len() + 1);
        for k in 0..tau.len() {
            let ha = self.ensure_action(h, tau.history.actions[k]);
            path.push(ha);
            match self.fwd_member(model, ha, cur, Some((tau.history.observations[k], tau.states[k + 1]))) {
                Some((ext, c)) => {
                    cur = ext;
                    h = c;
                }
                None => break,
            }
        }
        if let (Some(a), true) = (final_action, path.len() == tau.len()) {
            let ha = self.ensure_action(h, a);
            self.fwd_member(model, ha, cur, None);
            path.push(ha);
        }
        for ha in path.into_iter().rev() {
            self.bwd_update(ha);
        }
    }

    /// `(L(ha), U(ha))` including the parent's mass deficit.
    pub fn action_bounds(&self, ha: ActionIdx) -> (f64, f64) {
        let node = &self.actions[ha];
        let t = self.time_of(node.parent);
        let deficit = self.histories[node.parent].mass - node.mass;
        (node.sub_lower + self.cfg.vmin(t) * deficit, node.sub_upper + self.cfg.vmax(t) * deficit)
    }

    /// `(L, U)` for action `a` at `h`, treating an absent action as unexplored.
    pub fn action_bounds_at(&self, h: HistoryIdx, a: ActionId) -> (f64, f64) {
        match self.histories[h].children.get(&a) {
            Some(&ha) => self.action_bounds(ha),
            None => {
                let t = self.time_of(h);
                let m = self.histories[h].mass;
                (m * self.cfg.vmin(t), m * self.cfg.vmax(t))
            }
        }
    }

    /// Recomputes the bounds of `ha` from its children, then those of its
    /// parent history from all of its actions.
    pub fn bwd_update(&mut self, ha: ActionIdx) {
        let node = &self.actions[ha];
        let t = self.time_of(node.parent);
        let (mut lo, mut hi, mut child_mass) = (0.0, 0.0, 0.0);
        for &c in node.children.values() {
            let c = &self.histories[c];
            lo += c.lower;
            hi += c.upper;
            child_mass += c.mass;
        }
        let g = self.cfg.discount();
        let lost = node.mass - child_mass;
        let sub_upper = node.rbar + g * (hi + self.cfg.vmax(t + 1) * lost);
        let sub_lower = node.rbar + g * (lo + self.cfg.vmin(t + 1) * lost);
        let h = node.parent;
        let node = &mut self.actions[ha];
        node.sub_upper = sub_upper;
        node.sub_lower = sub_lower;
        self.refresh_history(h);
    }

    /// `U(h) = max_a U(ha)`, `L(h) = max_a L(ha)` over every action.
    pub fn refresh_history(&mut self, h: HistoryIdx) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for a in 0..self.num_actions {
            let (l, u) = self.action_bounds_at(h, a);
            lo = lo.max(l);
            hi = hi.max(u);
        }
        let node = &mut self.histories[h];
        node.lower = lo;
        node.upper = hi;
    }

    /// Bounds on the optimal value at the root belief.
    pub fn root_interval(&self) -> BoundInterval {
        let root = &self.histories[ROOT];
        let (l, u) = (root.lower, root.upper);
        let missing = 1.0 - root.mass;
        BoundInterval::new(l + self.cfg.vmin(self.root_time) * missing, u + self.cfg.vmax(self.root_time) * missing)
    }

    /// Bounds on `Q*(b_0, a)` for every root action.
    pub fn node_intervals(&self, h: HistoryIdx) -> Vec<(ActionId, BoundInterval)> {
        let t = self.time_of(h);
        let missing = if h == ROOT { 1.0 - self.histories[h].mass } else { 0.0 };
        (0..self.num_actions)
            .map(|a| {
                let iv = match self.histories[h].children.get(&a) {
                    Some(&ha) => {
                        let (l, u) = self.action_bounds(ha);
                        BoundInterval::new(l + self.cfg.vmin(t) * missing, u + self.cfg.vmax(t) * missing)
                    }
                    None if h == ROOT => BoundInterval::new(self.cfg.vmin(t), self.cfg.vmax(t)),
                    None => {
                        let m = self.histories[h].mass;
                        BoundInterval::new(m * self.cfg.vmin(t), m * self.cfg.vmax(t))
                    }
                };
                (a, iv)
            })
            .collect()
    }

    /// Marks dominated root actions as pruned. Pruning is sticky.
    pub fn prune_root(&mut self) -> Vec<ActionId> {
        let intervals = self.node_intervals(ROOT);
        let mut pruned = prune_decision(&intervals);
        pruned.extend(self.pruned_root_actions());
        if pruned.len() == self.num_actions {
            return self.pruned_root_actions();
        }
        for &a in &pruned {
            let ha = self.ensure_action(ROOT, a);
            self.actions[ha].pruned = true;
        }
        pruned.into_iter().collect()
    }

    pub fn pruned_root_actions(&self) -> Vec<ActionId> {
        self.histories[ROOT]
            .children
            .iter()
            .filter(|(_, &ha)| self.actions[ha].pruned)
            .map(|(&a, _)| a)
            .collect()
    }

    pub fn is_pruned(&self, h: HistoryIdx, a: ActionId) -> bool {
        self.histories[h].children.get(&a).is_some_and(|&ha| self.actions[ha].pruned)
    }

    /// Snapshot in the form consumed by the bound functions.
    pub fn to_view(&self) -> HistoryView {
        self.view_of(ROOT)
    }

    fn view_of(&self, h: HistoryIdx) -> HistoryView {
        let node = &self.histories[h];
        HistoryView {
            time: self.time_of(h),
            mass: node.mass,
            actions: node
                .children
                .iter()
                .map(|(&a, &ha)| {
                    let act = &self.actions[ha];
                    let view = ActionView {
                        mass: act.mass,
                        rbar: act.rbar,
                        children: act.children.iter().map(|(&z, &c)| (z, self.view_of(c))).collect(),
                    };
                    (a, view)
                })
                .collect(),
        }
    }

    /// Indented text dump, one node per line:
    /// `h:z depth mass - U L N -` and `a:id depth mass rbar U L N pruned`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        self.dump_history(ROOT, None, &mut out);
        out
    }

    fn dump_history(&self, h: HistoryIdx, z: Option<ObsId>, out: &mut String) {
        let node = &self.histories[h];
        let indent = "  ".repeat(2 * node.depth);
        let label = z.map_or_else(|| "root".to_string(), |z| z.to_string());
        let _ = writeln!(
            out,
            "{indent}h:{label} {} {:.12e} - {:.12e} {:.12e} {} -",
            node.depth, node.mass, node.upper, node.lower, node.visits
        );
        for (&a, &ha) in &node.children {
            let act = &self.actions[ha];
            let (l, u) = self.action_bounds(ha);
            let _ = writeln!(
                out,
                "{indent}  a:{a} {} {:.12e} {:.12e} {:.12e} {:.12e} {} {}",
                node.depth, act.mass, act.rbar, u, l, act.visits, act.pruned
            );
            for (&z, &c) in &act.children {
                self.dump_history(c, Some(z), out);
            }
        }
    }
}
