//! Histories and weighted state trajectories.

use crate::model::{ActionId, ObsId, StateId, TabularPomdp};
use crate::rng::splitmix64;

/// Actions and observations since the planning root.
///
/// A posterior history holds as many actions as observations; a propagated
/// history holds one more action.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct History {
    pub actions: Vec<ActionId>,
    pub observations: Vec<ObsId>,
}

impl History {
    pub fn is_posterior(&self) -> bool {
        self.actions.len() == self.observations.len()
    }

    pub fn is_propagated(&self) -> bool {
        self.actions.len() == self.observations.len() + 1
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty() && self.observations.is_empty()
    }

    pub fn with_action(&self, a: ActionId) -> History {
        let mut h = self.clone();
        h.actions.push(a);
        h
    }

    pub fn with_step(&self, a: ActionId, z: ObsId) -> History {
        let mut h = self.clone();
        h.actions.push(a);
        h.observations.push(z);
        h
    }
}

const ROOT_TAG: u64 = 0x7472_616a_5f72_6f6f;
const ACTION_TAG: u64 = 0x6163_7469_6f6e_0001;
const STATE_TAG: u64 = 0x7374_6174_6500_0002;
const OBS_TAG: u64 = 0x6f62_7300_0000_0003;

/// Fingerprint of a length-zero trajectory starting in `x0`.
pub fn root_fingerprint(x0: StateId) -> u64 {
    splitmix64(ROOT_TAG ^ splitmix64(x0 as u64))
}

/// Fingerprint of `parent` extended by `(a, x', z)`.
///
/// Each component is folded in with its own tag through a splitmix64 round, so
/// the result depends on the order of components and on the parent id.
pub fn extend_fingerprint(parent: u64, a: ActionId, next: StateId, z: ObsId) -> u64 {
    let mut h = splitmix64(parent ^ splitmix64(ACTION_TAG ^ a as u64));
    h = splitmix64(h ^ splitmix64(STATE_TAG ^ next as u64));
    splitmix64(h ^ splitmix64(OBS_TAG ^ z as u64))
}

/// A concrete path `x_0, a_0, x_1, z_1, ..., x_t, z_t` with its unnormalized
/// probability under the prior, transition and observation tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<StateId>,
    pub history: History,
    pub weight: f64,
    pub id: u64,
}

impl Trajectory {
    pub fn root(x0: StateId, weight: f64) -> Self {
        Trajectory {
            states: vec![x0],
            history: History::default(),
            weight,
            id: root_fingerprint(x0),
        }
    }

    pub fn last_state(&self) -> StateId {
        *self.states.last().expect("trajectory has at least one state")
    }

    /// Number of transitions taken.
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.states.len() == 1
    }

    pub fn extend_in_place(&mut self, model: &TabularPomdp, a: ActionId, z: ObsId, next: StateId) {
        let x = self.last_state();
        self.weight *= model.observation(next, z) * model.transition(x, a, next);
        self.id = extend_fingerprint(self.id, a, next, z);
        self.states.push(next);
        self.history.actions.push(a);
        self.history.observations.push(z);
    }

    /// Same path with the last step removed; `None` for a root trajectory.
    /// The weight is recomputed from scratch.
    pub fn prefix(&self, model: &TabularPomdp, prior_weight: f64) -> Option<Trajectory> {
        if self.is_empty() {
            return None;
        }
        let n = self.len() - 1;
        let mut t = Trajectory::root(self.states[0], prior_weight);
        for k in 0..n {
            t.extend_in_place(model, self.history.actions[k], self.history.observations[k], self.states[k + 1]);
        }
        Some(t)
    }

    /// Recomputes the weight as `w0 · Π O(z_k|x_k) T(x_k|x_{k-1}, a_{k-1})`.
    pub fn product_weight(&self, model: &TabularPomdp, prior_weight: f64) -> f64 {
        let mut w = prior_weight;
        for k in 0..self.len() {
            let (x, next) = (self.states[k], self.states[k + 1]);
            let (a, z) = (self.history.actions[k], self.history.observations[k]);
            w *= model.transition(x, a, next) * model.observation(next, z);
        }
        w
    }
}

pub fn trajectory_extend(
    model: &TabularPomdp,
    tau: &Trajectory,
    a: ActionId,
    z: ObsId,
    next: StateId,
) -> Trajectory {
    let mut out = tau.clone();
    out.extend_in_place(model, a, z, next);
    out
}
