use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::learner::LearnerConfig;
use itts::mdp::TabularMdp;
use itts::meta::{evaluate_meta_policy, meta_train, MetaConfig, MetaPolicy};

fn mean_final(meta: &MetaPolicy, test: &[TabularMdp], learner: &LearnerConfig) -> f64 {
    let curves = evaluate_meta_policy(meta, test, 50, 5, learner).unwrap();
    curves.iter().map(|c| c.final_return).sum::<f64>() / curves.len() as f64
}

#[test]
fn meta_trained_init_beats_uniform_init_on_mazes() {
    let params = MazeParams::default();
    let learner = LearnerConfig::default();
    let mut wins = 0;
    let mut margins = Vec::new();
    for s in 0..5u64 {
        let train: Vec<_> = (0..12).map(|k| generate_grid_maze(10_000 * (s + 1) + k, &params).unwrap()).collect();
        let test: Vec<_> = (0..5).map(|k| generate_grid_maze(10_000 * (s + 1) + 100 + k, &params).unwrap()).collect();
        let config = MetaConfig {
            rng_seed: s,
            ..MetaConfig::default()
        };
        let meta = meta_train(&train, &config, &learner).unwrap();
        // No meta step leaves the uniform initialization in place.
        let uniform = meta_train(&train, &MetaConfig { meta_step_size: 0.0, ..config }, &learner).unwrap();
        let eval = learner.with_seed(s);
        let (m, u) = (mean_final(&meta, &test, &eval), mean_final(&uniform, &test, &eval));
        margins.push(m - u);
        wins += usize::from(m >= u);
    }
    assert!(wins >= 4, "margins {margins:?}");
}
