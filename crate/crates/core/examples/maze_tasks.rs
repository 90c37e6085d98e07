//! Generates a few seeded grid mazes and prints them with their shortest paths.

use itts::envs::maze::{generate_layout, MazeParams};
use itts::mdp::{expected_return, SoftmaxPolicy};

fn main() -> itts::Result<()> {
    let params = MazeParams::default();
    for seed in 0..3 {
        let layout = generate_layout(seed, &params)?;
        let mdp = layout.to_mdp(&params)?;
        println!(
            "maze {seed}: shortest path {:?} steps, {} reachable transient states",
            layout.shortest_path_len(),
            mdp.reachable_transient_states().len()
        );
        for r in 0..layout.height {
            let row: String = (0..layout.width)
                .map(|c| {
                    let cell = layout.cell(r, c);
                    match () {
                        _ if cell == layout.start => 'S',
                        _ if cell == layout.goal => 'G',
                        _ if layout.walls[cell] => '#',
                        _ => '.',
                    }
                })
                .collect();
            println!("  {row}");
        }
        let uniform = SoftmaxPolicy::uniform(mdp.num_states(), mdp.num_actions());
        println!("  uniform policy return {:.4}\n", expected_return(&mdp, &uniform)?);
    }
    Ok(())
}
