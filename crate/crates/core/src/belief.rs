//! Sparse beliefs and exact Bayes updates.

use crate::error::BeliefError;
use crate::model::{ActionId, ObsId, StateId, TabularPomdp, RUNTIME_TOL};

/// A normalized distribution over states at a given time step. States with zero
/// mass are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Belief {
    // sorted by state, all probabilities > 0
    probs: Vec<(StateId, f64)>,
    time: usize,
}

impl Belief {
    /// The model's prior at time 0.
    pub fn prior(model: &TabularPomdp) -> Self {
        Self::from_dense(model.prior(), 0)
    }

    /// Builds a belief from a dense vector, dropping zero entries and
    /// renormalizing.
    pub fn from_dense(probs: &[f64], time: usize) -> Self {
        let total: f64 = probs.iter().filter(|p| **p > 0.0).sum();
        let probs = probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, p)| (x, p / total))
            .collect();
        Belief { probs, time }
    }

    pub fn point(state: StateId, time: usize) -> Self {
        Belief { probs: vec![(state, 1.0)], time }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn prob(&self, x: StateId) -> f64 {
        self.probs
            .binary_search_by_key(&x, |(s, _)| *s)
            .map(|i| self.probs[i].1)
            .unwrap_or(0.0)
    }

    /// Non-zero entries in increasing state order.
    pub fn iter(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.probs.iter().copied()
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn to_dense(&self, num_states: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_states];
        for &(x, p) in &self.probs {
            out[x] = p;
        }
        out
    }

    pub fn is_normalized(&self) -> bool {
        let sum: f64 = self.probs.iter().map(|(_, p)| p).sum();
        (sum - 1.0).abs() <= RUNTIME_TOL
    }
}

/// Predicted next-state distribution `Σ_x T(x'|x,a) b(x)`, dense.
pub fn propagate(model: &TabularPomdp, b: &Belief, a: ActionId) -> Vec<f64> {
    let mut out = vec![0.0; model.num_states()];
    for (x, p) in b.iter() {
        for (next, t) in model.transition_row(x, a).iter().enumerate() {
            out[next] += p * t;
        }
    }
    out
}

/// `P(z | H^-)` for every observation after taking `a` in `b`.
pub fn observation_marginals(model: &TabularPomdp, b: &Belief, a: ActionId) -> Vec<f64> {
    marginals_from_predicted(model, &propagate(model, b, a))
}

pub(crate) fn marginals_from_predicted(model: &TabularPomdp, predicted: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; model.num_obs()];
    for (x, p) in predicted.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        for (z, o) in model.observation_row(x).iter().enumerate() {
            out[z] += p * o;
        }
    }
    out
}

pub(crate) fn posterior_from_predicted(
    model: &TabularPomdp,
    predicted: &[f64],
    z: ObsId,
    time: usize,
) -> Option<(Belief, f64)> {
    let joint: Vec<f64> = predicted
        .iter()
        .enumerate()
        .map(|(x, p)| p * model.observation(x, z))
        .collect();
    let marginal: f64 = joint.iter().sum();
    if marginal <= 0.0 {
        return None;
    }
    Some((Belief::from_dense(&joint, time), marginal))
}

/// Exact Bayes update. Returns the posterior and the observation likelihood
/// `P(z | H^-)`.
pub fn belief_update(
    model: &TabularPomdp,
    b: &Belief,
    a: ActionId,
    z: ObsId,
) -> Result<(Belief, f64), BeliefError> {
    if b.time() >= model.horizon() {
        return Err(BeliefError::PastHorizon(b.time()));
    }
    let predicted = propagate(model, b, a);
    posterior_from_predicted(model, &predicted, z, b.time() + 1)
        .ok_or(BeliefError::ZeroLikelihood { action: a, obs: z })
}

/// Expected immediate reward `Σ_x b(x) r(x, a)`.
pub fn belief_reward(model: &TabularPomdp, b: &Belief, a: ActionId) -> f64 {
    b.iter().map(|(x, p)| p * model.reward(x, a)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{baby, build_baby, build_tiger, tiger, BabyParams, TigerParams};

    #[test]
    fn tiger_listen_hear_left() {
        let m = build_tiger(&TigerParams::default()).unwrap();
        let b = Belief::prior(&m);
        let (post, marginal) = belief_update(&m, &b, tiger::LISTEN, tiger::HEAR_LEFT).unwrap();
        assert!((marginal - 0.5).abs() < 1e-15);
        assert!((post.prob(tiger::TIGER_LEFT) - 0.85).abs() < 1e-12);
        assert!((post.prob(tiger::TIGER_RIGHT) - 0.15).abs() < 1e-12);
        assert_eq!(post.time(), 1);
    }

    #[test]
    fn point_mass_through_deterministic_step() {
        let m = build_tiger(&TigerParams { listen_accuracy: 1.0, ..Default::default() }).unwrap();
        let b = Belief::point(tiger::TIGER_RIGHT, 0);
        let (post, marginal) = belief_update(&m, &b, tiger::LISTEN, tiger::HEAR_RIGHT).unwrap();
        assert_eq!(marginal, 1.0);
        assert_eq!(post.prob(tiger::TIGER_RIGHT), 1.0);
        assert_eq!(post.support_len(), 1);
    }

    #[test]
    fn impossible_observation() {
        let m = build_tiger(&TigerParams { listen_accuracy: 1.0, ..Default::default() }).unwrap();
        let b = Belief::point(tiger::TIGER_RIGHT, 0);
        let err = belief_update(&m, &b, tiger::LISTEN, tiger::HEAR_LEFT).unwrap_err();
        assert_eq!(err, BeliefError::ZeroLikelihood { action: tiger::LISTEN, obs: tiger::HEAR_LEFT });
    }

    #[test]
    fn no_update_past_horizon() {
        let m = build_tiger(&TigerParams { horizon: 1, ..Default::default() }).unwrap();
        let b = Belief::prior(&m);
        assert!(belief_update(&m, &b, tiger::LISTEN, 0).is_err());
    }

    #[test]
    fn baby_update_matches_joint_enumeration() {
        let m = build_baby(&BabyParams::default()).unwrap();
        let mut dense = vec![0.0; 3];
        dense[baby::HUNGER] = 0.5;
        dense[baby::NO_NEED] = 0.5;
        let b = Belief::from_dense(&dense, 0);
        let (post, marginal) = belief_update(&m, &b, baby::NOTHING, baby::CRY).unwrap();

        // joint table over (x, x', z) then condition on z
        let mut joint = [[[0.0; 2]; 3]; 3];
        for x in 0..3 {
            for nx in 0..3 {
                for z in 0..2 {
                    joint[x][nx][z] = dense[x] * m.transition(x, baby::NOTHING, nx) * m.observation(nx, z);
                }
            }
        }
        let pz: f64 = (0..3).flat_map(|x| (0..3).map(move |nx| (x, nx))).map(|(x, nx)| joint[x][nx][baby::CRY]).sum();
        assert!((marginal - pz).abs() < 1e-15);
        for nx in 0..3 {
            let expect: f64 = (0..3).map(|x| joint[x][nx][baby::CRY]).sum::<f64>() / pz;
            assert!((post.prob(nx) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rewards() {
        let m = build_tiger(&TigerParams::default()).unwrap();
        assert_eq!(belief_reward(&m, &Belief::point(tiger::TIGER_LEFT, 0), tiger::OPEN_RIGHT), 10.0);
        assert_eq!(belief_reward(&m, &Belief::prior(&m), tiger::OPEN_LEFT), -45.0);
    }
}
