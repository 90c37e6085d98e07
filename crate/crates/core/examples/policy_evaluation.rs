//! Exact policy evaluation, state visitation and a Monte Carlo cross-check.

use itts::envs::maze::{generate_grid_maze, MazeParams};
use itts::mdp::{evaluate_policy, expected_return, on_policy_distribution, rollout, SoftmaxPolicy};

fn main() -> itts::Result<()> {
    let mdp = generate_grid_maze(4, &MazeParams::default())?;
    let policy = SoftmaxPolicy::uniform(mdp.num_states(), mdp.num_actions());

    let values = evaluate_policy(&mdp, &policy)?;
    let start = mdp.initial_dist().iter().position(|&p| p > 0.0).unwrap_or(0);
    println!("V(start) = {:.4} (untruncated)", values[start]);

    let exact = expected_return(&mdp, &policy)?;
    let episodes = 20_000;
    let sampled = (0..episodes)
        .map(|e| rollout(&mdp, &policy, e).map(|t| t.return_value))
        .sum::<itts::Result<f64>>()?
        / episodes as f64;
    println!("truncated return: exact {exact:.4}, mean of {episodes} rollouts {sampled:.4}");

    let profile = on_policy_distribution(&mdp, &policy)?;
    let mut busiest: Vec<(usize, f64)> = profile.on_policy_dist.iter().copied().enumerate().collect();
    busiest.sort_by(|a, b| b.1.total_cmp(&a.1));
    for (s, d) in busiest.iter().take(5) {
        println!("state {s:>3}: visits {:.2}, share {d:.3}", profile.visit_counts[*s]);
    }
    Ok(())
}
