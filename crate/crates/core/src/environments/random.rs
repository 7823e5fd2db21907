//! Random small models for property checks.

use rand::Rng;

use crate::model::{ModelTables, TabularPomdp};

/// Upper limits on the dimensions of a random model.
#[derive(Clone, Copy, Debug)]
pub struct RandomDims {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_obs: usize,
    /// Largest number of decision steps.
    pub max_steps: usize,
}

impl Default for RandomDims {
    fn default() -> Self {
        RandomDims { max_states: 4, max_actions: 3, max_obs: 3, max_steps: 4 }
    }
}

/// Random probability vector with some exact zeros; never all zero.
fn random_row<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut row: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random::<f64>() }).collect();
    if row.iter().all(|p| *p == 0.0) {
        row[rng.random_range(0..n)] = 1.0;
    }
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= total);
    row
}

/// A random valid model within `dims`. Rewards are integers in `[-10, 10]`
/// so that ties between actions occur now and then; the discount is 1 or
/// 0.95.
pub fn random_model<R: Rng + ?Sized>(dims: &RandomDims, rng: &mut R) -> TabularPomdp {
    let s = rng.random_range(1..=dims.max_states);
    let a = rng.random_range(1..=dims.max_actions);
    let z = rng.random_range(1..=dims.max_obs);
    let steps = rng.random_range(1..=dims.max_steps);
    let transition = (0..s * a).flat_map(|_| random_row(s, rng)).collect();
    let observation = (0..s).flat_map(|_| random_row(z, rng)).collect();
    let reward = (0..s * a).map(|_| rng.random_range(-10..=10) as f64).collect();
    let prior = random_row(s, rng);
    let discount = if rng.random_bool(0.5) { 1.0 } else { 0.95 };
    TabularPomdp::try_new(ModelTables {
        num_states: s,
        num_actions: a,
        num_obs: z,
        horizon: steps - 1,
        transition,
        observation,
        reward,
        prior,
        r_max: None,
        discount,
    })
    .expect("rows are normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn models_are_valid_and_within_limits() {
        let mut rng = stream(5, 0);
        let dims = RandomDims::default();
        for _ in 0..200 {
            let m = random_model(&dims, &mut rng);
            assert!(m.validate().is_empty());
            assert!(m.num_states() <= 4 && m.num_actions() <= 3 && m.num_obs() <= 3 && m.horizon() < 4);
        }
    }
}
