mod common;

use itts::envs::maze::{generate_layout, MazeLayout, MazeParams, DOWN, LEFT, RIGHT, UP};
use itts::learner::{train_to_convergence, LearnerConfig, TrainedTask};
use itts::mdp::{sample_states, SoftmaxPolicy, TabularMdp};
use itts::select::{policy_entropy, policy_kl, task_difference, ValidationStateSample};
use proptest::prelude::*;

use common::{entropy, kl, trained_from_policy};

fn small_maze_params(side: usize) -> MazeParams {
    MazeParams {
        width: side,
        height: side,
        max_episode_steps: 4 * side * side,
        ..MazeParams::default()
    }
}

fn random_policy(num_states: usize, num_actions: usize, seed: u64) -> SoftmaxPolicy {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let logits: Vec<f64> = (0..num_states * num_actions).map(|_| rng.gen_range(-3.0..3.0)).collect();
    SoftmaxPolicy::from_logits(num_states, num_actions, logits, 1.0).unwrap()
}

/// Nested average: over validation tasks, then over each task's reachable transient states.
fn difference_by_definition(p: &SoftmaxPolicy, q: &SoftmaxPolicy, validation: &[TabularMdp]) -> f64 {
    validation
        .iter()
        .map(|m| {
            let states = m.reachable_transient_states();
            states.iter().map(|&s| kl(&p.probs(s), &q.probs(s))).sum::<f64>() / states.len() as f64
        })
        .sum::<f64>()
        / validation.len() as f64
}

#[test]
fn exhaustive_difference_matches_definition_on_small_mazes() {
    for seed in 0..10 {
        let params = small_maze_params(4);
        let validation: Vec<TabularMdp> = (0..3)
            .map(|k| generate_layout(seed * 10 + k, &params).unwrap().to_mdp(&params).unwrap())
            .collect();
        let p = random_policy(16, 4, seed);
        let q = random_policy(16, 4, seed + 100);
        let sample = ValidationStateSample::exhaustive(&validation).unwrap();
        let got = task_difference(&trained_from_policy(p.clone()), &trained_from_policy(q.clone()), &sample).unwrap();
        let want = difference_by_definition(&p, &q, &validation);
        assert!((got - want).abs() <= 1e-12, "seed {seed}: {got} vs {want}");
    }
}

/// Open 5x5 grid with the start in one corner and the goal in another.
fn corner_maze(start: (usize, usize), goal: (usize, usize)) -> (MazeLayout, MazeParams) {
    let params = small_maze_params(5);
    let layout = MazeLayout {
        width: 5,
        height: 5,
        walls: vec![false; 25],
        start: start.0 * 5 + start.1,
        goal: goal.0 * 5 + goal.1,
    };
    (layout, params)
}

#[test]
fn opposite_goals_give_positive_difference() {
    let (a, params) = corner_maze((0, 0), (4, 4));
    let (b, _) = corner_maze((4, 4), (0, 0));
    let cfg = LearnerConfig::default();
    let ma = a.to_mdp(&params).unwrap();
    let mb = b.to_mdp(&params).unwrap();
    let ta = TrainedTask::from_mdp(None, &ma, &cfg).unwrap();
    let tb = TrainedTask::from_mdp(None, &mb, &cfg).unwrap();
    let sample = ValidationStateSample::exhaustive(&[ma, mb]).unwrap();
    let delta = task_difference(&ta, &tb, &sample).unwrap();
    assert!(delta > 0.0, "{delta}");
    // The learned policies prefer opposite directions at the shared start cells.
    assert!(ta.optimal_policy.prob(0, DOWN) + ta.optimal_policy.prob(0, RIGHT) > 0.5);
    assert!(tb.optimal_policy.prob(24, UP) + tb.optimal_policy.prob(24, LEFT) > 0.5);
}

#[test]
fn sampled_difference_is_consistent_with_exhaustive() {
    let params = MazeParams::default();
    let cfg = LearnerConfig::default();
    let layouts: Vec<TabularMdp> = (0..4).map(|k| generate_layout(500 + k, &params).unwrap().to_mdp(&params).unwrap()).collect();
    let t1 = TrainedTask::from_mdp(None, &layouts[0], &cfg).unwrap();
    let t2 = TrainedTask::from_mdp(None, &layouts[1], &cfg).unwrap();
    let validation = &layouts[2..];
    let exact = task_difference(&t1, &t2, &ValidationStateSample::exhaustive(validation).unwrap()).unwrap();
    assert!((exact - difference_by_definition(&t1.optimal_policy, &t2.optimal_policy, validation)).abs() < 1e-12);
    let mut within = 0;
    for seed in 0..20 {
        let sample = ValidationStateSample::sample(validation, 50, seed).unwrap();
        let estimate = task_difference(&t1, &t2, &sample).unwrap();
        if (estimate - exact).abs() <= 0.1 {
            within += 1;
        }
    }
    assert_eq!(within, 20, "exact {exact}");
}

#[test]
fn uniform_state_sampling_on_a_ten_state_maze() {
    let params = MazeParams {
        width: 4,
        height: 3,
        wall_density: 0.0,
        ..MazeParams::default()
    };
    let layout = MazeLayout {
        width: 4,
        height: 3,
        walls: vec![false, false, false, false, false, true, false, false, false, false, false, false],
        start: 0,
        goal: 11,
    };
    let mdp = layout.to_mdp(&params).unwrap();
    let candidates = mdp.reachable_transient_states();
    assert_eq!(candidates.len(), 10);
    let draws = sample_states(&mdp, 10_000, 3).unwrap();
    for &s in &candidates {
        let freq = draws.iter().filter(|&&d| d == s).count() as f64 / draws.len() as f64;
        assert!((freq - 0.1).abs() <= 0.02, "state {s}: {freq}");
    }
}

#[test]
fn trained_maze_policy_entropy_stays_in_bounds() {
    let params = MazeParams::default();
    let mdp = generate_layout(3, &params).unwrap().to_mdp(&params).unwrap();
    let policy = train_to_convergence(&mdp, &LearnerConfig::default()).unwrap().policy;
    let h = policy_entropy(&policy, &mdp.reachable_transient_states()).unwrap();
    assert!((0.0..=4f64.ln()).contains(&h));
    for s in mdp.reachable_transient_states() {
        assert!(entropy(&policy.probs(s)) <= 4f64.ln() + 1e-12);
    }
}

proptest! {
    #[test]
    fn kl_is_non_negative_and_zero_on_self(seed_p in any::<u64>(), seed_q in any::<u64>(), n in 1usize..40) {
        let p = random_policy(6, 3, seed_p);
        let q = random_policy(6, 3, seed_q);
        let sample = ValidationStateSample { entries: (0..n).map(|i| (0, i % 6)).collect() };
        prop_assert!(policy_kl(&p, &q, &sample).unwrap() >= 0.0);
        prop_assert!(policy_kl(&p, &p, &sample).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn difference_is_an_average_of_state_divergences(seed in any::<u64>()) {
        let p = random_policy(5, 4, seed);
        let q = random_policy(5, 4, seed ^ 0xabcdef);
        let entries: Vec<(usize, usize)> = (0..5).map(|s| (0, s)).collect();
        let direct = (0..5).map(|s| kl(&p.probs(s), &q.probs(s))).sum::<f64>() / 5.0;
        let got = policy_kl(&p, &q, &ValidationStateSample { entries }).unwrap();
        prop_assert!((got - direct).abs() < 1e-12);
    }
}
