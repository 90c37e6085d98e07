use itts::envs::cartpole::{generate_cartpole, CartPoleParams};
use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::learner::{train_to_convergence, Algorithm, LearnerConfig};
use itts::mdp::{expected_return, SoftmaxPolicy, TabularMdp};

fn uniform_return(mdp: &TabularMdp) -> f64 {
    expected_return(mdp, &SoftmaxPolicy::uniform(mdp.num_states(), mdp.num_actions())).unwrap()
}

fn mean_trained_return(mdp: &TabularMdp, cfg: &LearnerConfig, seeds: u64) -> f64 {
    (0..seeds)
        .map(|s| expected_return(mdp, &train_to_convergence(mdp, &cfg.with_seed(s)).unwrap().policy).unwrap())
        .sum::<f64>()
        / seeds as f64
}

#[test]
fn training_improves_on_uniform_for_generated_mazes() {
    let params = MazeParams::default();
    let cfg = LearnerConfig::default();
    for task in 0..4u64 {
        let mdp = generate_grid_maze(task, &params).unwrap();
        let (trained, uniform) = (mean_trained_return(&mdp, &cfg, 20), uniform_return(&mdp));
        assert!(trained >= uniform, "maze {task}: {trained} < {uniform}");
    }
}

#[test]
fn training_improves_on_uniform_for_generated_cartpoles() {
    let params = CartPoleParams::default();
    let cfg = LearnerConfig {
        max_epochs: 300,
        ..LearnerConfig::default()
    };
    for task in 0..2u64 {
        let mdp = generate_cartpole(task, &params).unwrap();
        let (trained, uniform) = (mean_trained_return(&mdp, &cfg, 20), uniform_return(&mdp));
        assert!(trained >= uniform, "cart-pole {task}: {trained} < {uniform}");
    }
}

#[test]
fn boltzmann_q_also_improves_on_uniform() {
    let params = MazeParams::default();
    let cfg = LearnerConfig {
        algorithm: Algorithm::BoltzmannQ,
        ..LearnerConfig::default()
    };
    let mdp = generate_grid_maze(7, &params).unwrap();
    assert!(mean_trained_return(&mdp, &cfg, 20) >= uniform_return(&mdp));
}
