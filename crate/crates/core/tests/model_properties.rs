mod common;

use certipomdp_core::oracle::{enumerate_trajectories, exact_action_value};
use certipomdp_core::{
    belief_update, exact_optimal_value, exact_policy_value, format_model, observation_marginals, parse_model,
    propagate, Belief, PolicyTree,
};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn observation_marginals_sum_to_one(seed in any::<u64>()) {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        for a in 0..m.num_actions() {
            let total: f64 = observation_marginals(&m, &b, a).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn posteriors_mix_back_to_prediction(seed in any::<u64>()) {
        let m = common::model(seed);
        prop_assume!(m.horizon() > 0);
        let b = Belief::prior(&m);
        for a in 0..m.num_actions() {
            let mut mix = vec![0.0; m.num_states()];
            for z in 0..m.num_obs() {
                if let Ok((post, p)) = belief_update(&m, &b, a, z) {
                    prop_assert!(post.is_normalized());
                    for (x, q) in post.iter() {
                        mix[x] += p * q;
                    }
                }
            }
            for (x, y) in mix.iter().zip(propagate(&m, &b, a)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trajectory_weights_match_product(seed in any::<u64>()) {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let mut rng = common::rng(seed);
        for _ in 0..20 {
            let tau = common::random_walk(&m, &b, m.horizon(), &mut rng);
            let w0 = b.prob(tau.states[0]);
            let again = tau.product_weight(&m, w0);
            prop_assert!((tau.weight - again).abs() <= 1e-12 * again.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>()) {
        let m = common::model(seed);
        let text = format_model(&m);
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(format_model(&back), text);
    }

    #[test]
    fn optimal_value_dominates_random_policies(seed in any::<u64>()) {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let best = exact_optimal_value(&m, &b).unwrap();
        prop_assert!((exact_policy_value(&m, &b, &best.policy).unwrap() - best.value).abs() < 1e-12);
        let mut rng = common::rng(seed);
        for _ in 0..10 {
            let pi = PolicyTree::random(m.num_actions(), m.num_obs(), m.horizon(), &mut rng);
            prop_assert!(exact_policy_value(&m, &b, &pi).unwrap() <= best.value + 1e-9);
            let a = rng.random_range(0..m.num_actions());
            prop_assert!(exact_action_value(&m, &b, a, &pi).unwrap() <= best.q_values[a] + 1e-9);
        }
    }

    #[test]
    fn recursion_equals_trajectory_sum(seed in any::<u64>()) {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let pi = PolicyTree::random(m.num_actions(), m.num_obs(), m.horizon(), &mut common::rng(seed));
        let trajs = enumerate_trajectories(&m, &b, &pi, m.horizon()).unwrap();
        let g = m.discount();
        let mut by_step = vec![0.0; m.horizon() + 1];
        let mut value = 0.0;
        for (tau, p) in &trajs {
            let a = pi.node(&tau.history.observations).unwrap().action;
            value += g.powi(tau.len() as i32) * p * m.reward(tau.last_state(), a);
            by_step[tau.len()] += p;
        }
        for total in by_step {
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
        prop_assert!((value - exact_policy_value(&m, &b, &pi).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn optimal_value_is_strictly_better_somewhere() {
    let mut strict = 0;
    for seed in 0..200 {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let best = exact_optimal_value(&m, &b).unwrap();
        let mut rng = common::rng(seed);
        let pi = PolicyTree::random(m.num_actions(), m.num_obs(), m.horizon(), &mut rng);
        if exact_policy_value(&m, &b, &pi).unwrap() < best.value - 1e-9 {
            strict += 1;
        }
    }
    assert!(strict > 0);
}
