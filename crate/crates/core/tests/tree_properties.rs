mod common;

use certipomdp_core::bounds::{root_bounds_closed, root_bounds_recursive, HistoryView};
use certipomdp_core::oracle::enumerate_trajectories;
use certipomdp_core::{Belief, BeliefTree, BoundConfig, PolicyTree, Trajectory};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn same_masses(x: &HistoryView, y: &HistoryView) -> bool {
    (x.mass - y.mass).abs() < 1e-12
        && x.actions.len() == y.actions.len()
        && x.actions.iter().zip(&y.actions).all(|((a, p), (b, q))| {
            a == b
                && (p.mass - q.mass).abs() < 1e-12
                && (p.rbar - q.rbar).abs() < 1e-12
                && p.children.len() == q.children.len()
                && p.children.iter().zip(&q.children).all(|((z, c), (w, d))| z == w && same_masses(c, d))
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn masses_shrink_along_paths(seed in any::<u64>(), walks in 1usize..80) {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let tree = common::random_tree(&m, &b, walks, &mut common::rng(seed));
        for h in 0..tree.num_history_nodes() {
            let node = tree.history(h);
            prop_assert!(node.mass >= 0.0 && node.mass <= 1.0 + 1e-9);
            prop_assert!(node.lower <= node.upper + 1e-9);
            let recorded: f64 = tree.members(h).iter().map(|x| x.weight).sum();
            prop_assert!((recorded - node.mass).abs() < 1e-12);
            for &ha in node.children.values() {
                let act = tree.action(ha);
                prop_assert!(act.mass <= node.mass + 1e-9);
                let below: f64 = act.children.values().map(|&c| tree.history(c).mass).sum();
                prop_assert!(below <= act.mass + 1e-9);
                prop_assert!(act.rbar.abs() <= m.r_max() * act.mass + 1e-12);
            }
        }
    }

    #[test]
    fn insertion_order_does_not_matter(seed in any::<u64>(), walks in 1usize..60) {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let mut rng = common::rng(seed);
        let steps = m.horizon();
        let items: Vec<(Trajectory, Option<usize>)> = (0..walks)
            .map(|_| {
                let len = rng.random_range(0..=steps);
                let tau = common::random_walk(&m, &b, len, &mut rng);
                let a = rng.random_bool(0.8).then(|| rng.random_range(0..m.num_actions()));
                (tau, a)
            })
            .collect();
        let build = |items: &[(Trajectory, Option<usize>)]| {
            let mut tree = BeliefTree::new(0, m.num_actions(), BoundConfig::for_model(&m));
            for (tau, a) in items {
                tree.insert(&m, tau, b.prob(tau.states[0]), *a);
            }
            tree
        };
        let first = build(&items);
        let mut shuffled = items.clone();
        shuffled.shuffle(&mut rng);
        let doubled: Vec<_> = shuffled.iter().chain(items.iter()).cloned().collect();
        let second = build(&doubled);
        prop_assert!(same_masses(&first.to_view(), &second.to_view()));
        let (x, y) = (first.root_interval(), second.root_interval());
        prop_assert!((x.lower - y.lower).abs() < 1e-9 && (x.upper - y.upper).abs() < 1e-9);
    }

    #[test]
    fn policy_tree_matches_closed_form(seed in any::<u64>()) {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let mut rng = common::rng(seed ^ 5);
        let pi = PolicyTree::random(m.num_actions(), m.num_obs(), m.horizon(), &mut rng);
        let all: Vec<Trajectory> =
            enumerate_trajectories(&m, &b, &pi, m.horizon()).unwrap().into_iter().map(|(t, _)| t).collect();
        let kept = common::prefix_closed(&m, &b, &all, 0.7, &mut rng);
        let cfg = BoundConfig::for_model(&m);
        let mut tree = BeliefTree::new(0, m.num_actions(), cfg.clone());
        for tau in &kept {
            let a = pi.node(&tau.history.observations).unwrap().action;
            tree.insert(&m, tau, b.prob(tau.states[0]), Some(a));
        }
        let closed = root_bounds_closed(&m, 0, &pi, &kept, &cfg).unwrap();
        let rec = root_bounds_recursive(&tree.to_view(), &cfg).unwrap();
        prop_assert!((closed.lower - rec.lower).abs() < 1e-9 && (closed.upper - rec.upper).abs() < 1e-9);
    }
}

#[test]
fn width_never_grows() {
    for seed in 0..100 {
        let m = common::model(seed);
        let b = Belief::prior(&m);
        let mut rng = common::rng(seed);
        let mut tree = BeliefTree::new(0, m.num_actions(), BoundConfig::for_model(&m));
        let mut width = tree.root_interval().width();
        let (mut lower, mut upper) = (tree.root_interval().lower, tree.root_interval().upper);
        for _ in 0..200 {
            let len = rng.random_range(0..=m.horizon());
            let tau = common::random_walk(&m, &b, len, &mut rng);
            let a = rng.random_range(0..m.num_actions());
            tree.insert(&m, &tau, b.prob(tau.states[0]), Some(a));
            let iv = tree.root_interval();
            assert!(iv.width() <= width + 1e-9, "seed {seed}: {} > {width}", iv.width());
            assert!(iv.lower >= lower - 1e-9 && iv.upper <= upper + 1e-9, "seed {seed}");
            (width, lower, upper) = (iv.width(), iv.lower, iv.upper);
        }
    }
}
