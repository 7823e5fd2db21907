//! Closed-loop episodes against the model's own tables.

use std::time::Instant;

use certipomdp_core::rng::{derive_seed, sample_index, stream};
use certipomdp_core::{belief_update, plan, Belief, SolveError, SolverConfig, TabularPomdp};
use serde::Serialize;

/// Stream tag for the simulated environment. Planning draws from its own
/// streams, so solvers compared on the same seed face the same world draws.
pub const ENV_STREAM: u64 = 0x656e_7673;
const STEP_SEED_TAG: u64 = 0x7374_6570;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub env: String,
    pub solver: String,
    pub seed: u64,
    pub horizon: usize,
    pub total_reward: f64,
    pub steps: usize,
    pub step_wall_ms: Vec<f64>,
    /// Steps at which the planner certified its action.
    pub certified_count: usize,
}

impl EpisodeResult {
    pub fn wall_ms(&self) -> f64 {
        self.step_wall_ms.iter().sum()
    }
}

/// Plans, acts and observes from the prior until the last step. The
/// planner's seed at step `t` is derived from `(seed, t)`; `cfg.seed` is
/// ignored.
pub fn run_episode(env: &str, model: &TabularPomdp, cfg: &SolverConfig, seed: u64) -> Result<EpisodeResult, SolveError> {
    let mut world = stream(seed, ENV_STREAM);
    let mut x = sample_index(model.prior(), &mut world);
    let mut b = Belief::prior(model);
    let mut out = EpisodeResult {
        env: env.to_string(),
        solver: cfg.kind.to_string(),
        seed,
        horizon: model.horizon() + 1,
        total_reward: 0.0,
        steps: 0,
        step_wall_ms: Vec::with_capacity(model.horizon() + 1),
        certified_count: 0,
    };
    let g = model.discount();
    for t in 0..=model.horizon() {
        let step_cfg = SolverConfig { seed: derive_seed(seed, STEP_SEED_TAG ^ t as u64), ..cfg.clone() };
        let start = Instant::now();
        let r = plan(model, &b, &step_cfg)?;
        out.step_wall_ms.push(start.elapsed().as_secs_f64() * 1e3);
        out.certified_count += r.certified_optimal as usize;
        let a = r.chosen_action;
        out.total_reward += g.powi(t as i32) * model.reward(x, a);
        out.steps += 1;
        if t == model.horizon() {
            break;
        }
        let next = sample_index(model.transition_row(x, a), &mut world);
        let z = sample_index(model.observation_row(next), &mut world);
        b = belief_update(model, &b, a, z).expect("observation drawn from the model has positive likelihood").0;
        x = next;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use certipomdp_core::{EnvKind, ModelTables, SolverKind};

    #[test]
    fn zero_reward_model_earns_nothing() {
        let m = TabularPomdp::try_new(ModelTables {
            num_states: 2,
            num_actions: 2,
            num_obs: 2,
            horizon: 3,
            transition: vec![0.5; 8],
            observation: vec![0.7, 0.3, 0.2, 0.8],
            reward: vec![0.0; 4],
            prior: vec![0.5, 0.5],
            r_max: None,
            discount: 1.0,
        })
        .unwrap();
        let r = run_episode("zero", &m, &SolverConfig::new(SolverKind::Pomcp, 50, 0), 3).unwrap();
        assert_eq!(r.total_reward, 0.0);
        assert_eq!(r.steps, 4);
    }

    #[test]
    fn single_forced_step() {
        let m = TabularPomdp::try_new(ModelTables {
            num_states: 1,
            num_actions: 1,
            num_obs: 1,
            horizon: 0,
            transition: vec![1.0],
            observation: vec![1.0],
            reward: vec![-2.5],
            prior: vec![1.0],
            r_max: None,
            discount: 1.0,
        })
        .unwrap();
        let r = run_episode("one", &m, &SolverConfig::new(SolverKind::RbPomcp, 10, 0), 0).unwrap();
        assert_eq!((r.total_reward, r.steps), (-2.5, 1));
    }

    #[test]
    fn seed_fixes_the_run() {
        let m = EnvKind::Tiger.build(Some(4)).unwrap();
        let cfg = SolverConfig::new(SolverKind::DbPomcp, 200, 0);
        let mut x = run_episode("tiger", &m, &cfg, 9).unwrap();
        let mut y = run_episode("tiger", &m, &cfg, 9).unwrap();
        x.step_wall_ms.clear();
        y.step_wall_ms.clear();
        assert_eq!(x, y);
    }
}
