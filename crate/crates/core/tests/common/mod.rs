#![allow(dead_code)]

use std::collections::HashSet;

use certipomdp_core::environments::{random_model, RandomDims};
use certipomdp_core::rng::{sample_index, splitmix64, stream};
use certipomdp_core::{Belief, BeliefTree, BoundConfig, History, ObsId, TabularPomdp, Trajectory};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream(seed, 0x7465_7374)
}

pub fn model(seed: u64) -> TabularPomdp {
    random_model(&RandomDims::default(), &mut rng(seed))
}

/// Deterministic pseudo-random number in `0..100` for `(seed, history, z)`.
pub fn history_roll(seed: u64, h: &History, z: ObsId) -> u64 {
    let mut x = splitmix64(seed);
    for &a in &h.actions {
        x = splitmix64(x ^ (a as u64 + 1));
    }
    for &o in &h.observations {
        x = splitmix64(x ^ ((o as u64 + 1) << 32));
    }
    splitmix64(x ^ (z as u64 + 0x55)) % 100
}

/// Observation subset retaining a branch when its roll is below `level`.
pub fn subset(seed: u64, level: u64) -> impl Fn(&History, ObsId) -> bool {
    move |h: &History, z: ObsId| history_roll(seed, h, z) < level
}

/// Random prefix-closed subset of `all` (which must list prefixes first).
pub fn prefix_closed(model: &TabularPomdp, b: &Belief, all: &[Trajectory], keep: f64, rng: &mut impl Rng) -> Vec<Trajectory> {
    let mut kept_ids = HashSet::new();
    let mut out = Vec::new();
    for tau in all {
        let parent_ok = match tau.prefix(model, b.prob(tau.states[0])) {
            None => true,
            Some(p) => kept_ids.contains(&p.id),
        };
        if parent_ok && rng.random_bool(keep) {
            kept_ids.insert(tau.id);
            out.push(tau.clone());
        }
    }
    out
}

/// Samples one trajectory with uniformly random actions for `steps` steps.
pub fn random_walk(model: &TabularPomdp, b: &Belief, steps: usize, rng: &mut impl Rng) -> Trajectory {
    let support: Vec<_> = b.iter().collect();
    let probs: Vec<f64> = support.iter().map(|p| p.1).collect();
    let (x0, w0) = support[sample_index(&probs, rng)];
    let mut tau = Trajectory::root(x0, w0);
    for _ in 0..steps {
        let a = rng.random_range(0..model.num_actions());
        let next = sample_index(model.transition_row(tau.last_state(), a), rng);
        let z = sample_index(model.observation_row(next), rng);
        tau.extend_in_place(model, a, z, next);
    }
    tau
}

/// Tree grown from `n` random walks of random length, each ending with a
/// random action.
pub fn random_tree(model: &TabularPomdp, b: &Belief, n: usize, rng: &mut impl Rng) -> BeliefTree {
    let mut tree = BeliefTree::new(b.time(), model.num_actions(), BoundConfig::for_model(model));
    let steps = model.horizon() - b.time();
    for _ in 0..n {
        let len = rng.random_range(0..=steps);
        let tau = random_walk(model, b, len, rng);
        let last = rng.random_bool(0.8).then(|| rng.random_range(0..model.num_actions()));
        tree.insert(model, &tau, b.prob(tau.states[0]), last);
    }
    tree
}
