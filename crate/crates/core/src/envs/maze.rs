//! Procedural grid mazes on a fixed bounding grid.
//!
//! Every maze of a family uses the same `width * height` cell encoding; walls
//! are cells the agent can never enter, so differently shaped mazes still
//! share one state space and policies transfer between them.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{TabularMdp, Transition};
use crate::seed;

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const NUM_ACTIONS: usize = 4;

const MAX_ATTEMPTS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MazeParams {
    pub width: usize,
    pub height: usize,
    /// Probability that any cell is a wall, in `[0, 1)`.
    pub wall_density: f64,
    /// Probability that a task places its start in the top-left quadrant and
    /// its goal in the bottom-right one; otherwise both are uniform over free cells.
    pub corner_bias: f64,
    pub max_episode_steps: usize,
    pub discount: f64,
}

impl Default for MazeParams {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            wall_density: 0.2,
            corner_bias: 0.75,
            max_episode_steps: 100,
            discount: 1.0,
        }
    }
}

impl MazeParams {
    pub fn validate(&self) -> Result<()> {
        if self.width < 3 || self.height < 3 {
            return Err(Error::config("maze width and height must be at least 3"));
        }
        if !(0.0..1.0).contains(&self.wall_density) {
            return Err(Error::config("wall_density must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.corner_bias) {
            return Err(Error::config("corner_bias must lie in [0, 1]"));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::config("max_episode_steps must be positive"));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::config("discount must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.width * self.height
    }

    /// Reward for one move; reaching the goal adds 1.
    pub fn step_penalty(&self) -> f64 {
        -1.0 / self.max_episode_steps as f64
    }
}

/// Wall mask plus start and goal cells.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MazeLayout {
    pub width: usize,
    pub height: usize,
    pub walls: Vec<bool>,
    pub start: usize,
    pub goal: usize,
}

impl MazeLayout {
    pub fn cell(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn row_col(&self, cell: usize) -> (usize, usize) {
        (cell / self.width, cell % self.width)
    }

    /// Cell reached by `action` from `cell`; bumping a wall or the border stays put.
    pub fn step(&self, cell: usize, action: usize) -> usize {
        let (r, c) = self.row_col(cell);
        let target = match action {
            UP if r > 0 => Some((r - 1, c)),
            DOWN if r + 1 < self.height => Some((r + 1, c)),
            LEFT if c > 0 => Some((r, c - 1)),
            RIGHT if c + 1 < self.width => Some((r, c + 1)),
            _ => None,
        };
        match target {
            Some((r2, c2)) if !self.walls[self.cell(r2, c2)] => self.cell(r2, c2),
            _ => cell,
        }
    }

    /// Breadth-first distances from `from` over free cells (`None` = unreachable).
    pub fn distances_from(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.walls.len()];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(cell) = queue.pop_front() {
            let d = dist[cell].unwrap_or(0);
            for a in 0..NUM_ACTIONS {
                let next = self.step(cell, a);
                if dist[next].is_none() {
                    dist[next] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    pub fn shortest_path_len(&self) -> Option<usize> {
        self.distances_from(self.start)[self.goal]
    }

    pub fn to_mdp(&self, params: &MazeParams) -> Result<TabularMdp> {
        let n = self.width * self.height;
        let step = params.step_penalty();
        let mut dynamics = Vec::with_capacity(n * NUM_ACTIONS);
        let mut absorbing = Vec::new();
        for cell in 0..n {
            let terminal = cell == self.goal || self.walls[cell];
            if terminal {
                absorbing.push(cell);
            }
            for a in 0..NUM_ACTIONS {
                if terminal {
                    dynamics.push(vec![Transition::new(cell, 0.0, 1.0)]);
                    continue;
                }
                let next = self.step(cell, a);
                let reward = if next == self.goal { 1.0 + step } else { step };
                dynamics.push(vec![Transition::new(next, reward, 1.0)]);
            }
        }
        let mut mu = vec![0.0; n];
        mu[self.start] = 1.0;
        TabularMdp::new(
            n,
            NUM_ACTIONS,
            dynamics,
            params.discount,
            mu,
            &absorbing,
            params.max_episode_steps,
        )
    }
}

fn pick_cell<R: Rng>(
    rng: &mut R,
    walls: &[bool],
    width: usize,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    exclude: Option<usize>,
) -> Option<usize> {
    let candidates: Vec<usize> = rows
        .flat_map(|r| cols.clone().map(move |c| r * width + c))
        .filter(|&cell| !walls[cell] && Some(cell) != exclude)
        .collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.gen_range(0..candidates.len())])
    }
}

/// Samples a connected layout. Cells cut off from the start become walls.
pub fn generate_layout(seed: u64, params: &MazeParams) -> Result<MazeLayout> {
    params.validate()?;
    let (w, h) = (params.width, params.height);
    let mut rng = seed::rng(seed);
    for _ in 0..MAX_ATTEMPTS {
        let walls: Vec<bool> = (0..w * h).map(|_| rng.gen::<f64>() < params.wall_density).collect();
        let cornered = rng.gen::<f64>() < params.corner_bias;
        let (start, goal) = if cornered {
            let start = pick_cell(&mut rng, &walls, w, 0..h.div_ceil(2), 0..w.div_ceil(2), None);
            let goal = pick_cell(&mut rng, &walls, w, h / 2..h, w / 2..w, start);
            (start, goal)
        } else {
            let start = pick_cell(&mut rng, &walls, w, 0..h, 0..w, None);
            let goal = pick_cell(&mut rng, &walls, w, 0..h, 0..w, start);
            (start, goal)
        };
        let (Some(start), Some(goal)) = (start, goal) else {
            continue;
        };
        let mut layout = MazeLayout {
            width: w,
            height: h,
            walls,
            start,
            goal,
        };
        let dist = layout.distances_from(start);
        if dist[goal].is_none() {
            continue;
        }
        for (cell, d) in dist.iter().enumerate() {
            if d.is_none() {
                layout.walls[cell] = true;
            }
        }
        return Ok(layout);
    }
    Err(Error::Generation(format!(
        "no connected {w}x{h} maze with wall density {} after {MAX_ATTEMPTS} attempts",
        params.wall_density
    )))
}

/// Generates the MDP of a seeded maze.
pub fn generate_grid_maze(seed: u64, params: &MazeParams) -> Result<TabularMdp> {
    generate_layout(seed, params)?.to_mdp(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{expected_return, SoftmaxPolicy};

    fn mdp_shortest_path(mdp: &TabularMdp) -> Option<usize> {
        let start = mdp.initial_dist().iter().position(|&p| p > 0.0)?;
        let mut dist = vec![usize::MAX; mdp.num_states()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            if mdp.is_absorbing(s) {
                // Absorbing reachable cell with positive entry reward is the goal.
                return Some(dist[s]);
            }
            for a in 0..mdp.num_actions() {
                for t in mdp.transitions(s, a) {
                    if dist[t.next_state] == usize::MAX {
                        dist[t.next_state] = dist[s] + 1;
                        queue.push_back(t.next_state);
                    }
                }
            }
        }
        None
    }

    #[test]
    fn adjacent_goal_greedy_return_is_one_step_reward() {
        let params = MazeParams {
            width: 3,
            height: 3,
            wall_density: 0.0,
            ..MazeParams::default()
        };
        let layout = MazeLayout {
            width: 3,
            height: 3,
            walls: vec![false; 9],
            start: 4,
            goal: 5,
        };
        let mdp = layout.to_mdp(&params).unwrap();
        let mut logits = vec![0.0; 9 * 4];
        logits[4 * 4 + RIGHT] = 50.0;
        let greedy = SoftmaxPolicy::from_logits(9, 4, logits, 1.0).unwrap();
        let ret = expected_return(&mdp, &greedy).unwrap();
        let max_step_reward = mdp
            .dynamics()
            .iter()
            .flatten()
            .map(|t| t.reward)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((ret - max_step_reward).abs() < 1e-12);
        assert!((max_step_reward - (1.0 - 1.0 / 100.0)).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_maze() {
        let p = MazeParams::default();
        assert_eq!(generate_grid_maze(42, &p).unwrap(), generate_grid_maze(42, &p).unwrap());
    }

    #[test]
    fn mdp_shortest_path_matches_mask_bfs() {
        let p = MazeParams {
            wall_density: 0.2,
            ..MazeParams::default()
        };
        for seed in 0..50 {
            let layout = generate_layout(seed, &p).unwrap();
            let mdp = layout.to_mdp(&p).unwrap();
            // Oracle: BFS on the raw mask, independent of `MazeLayout::step`.
            let (w, h) = (layout.width, layout.height);
            let mut dist = vec![usize::MAX; w * h];
            dist[layout.start] = 0;
            let mut queue = VecDeque::from([layout.start]);
            while let Some(c) = queue.pop_front() {
                let (r, col) = (c / w, c % w);
                let mut nbrs = Vec::new();
                if r > 0 { nbrs.push(c - w); }
                if r + 1 < h { nbrs.push(c + w); }
                if col > 0 { nbrs.push(c - 1); }
                if col + 1 < w { nbrs.push(c + 1); }
                for nb in nbrs {
                    if !layout.walls[nb] && dist[nb] == usize::MAX {
                        dist[nb] = dist[c] + 1;
                        queue.push_back(nb);
                    }
                }
            }
            assert_ne!(dist[layout.goal], usize::MAX);
            assert_eq!(mdp_shortest_path(&mdp), Some(dist[layout.goal]), "seed {seed}");
        }
    }

    #[test]
    fn impossible_density_is_generation_error() {
        let p = MazeParams {
            wall_density: 0.99,
            ..MazeParams::default()
        };
        assert!(matches!(generate_grid_maze(1, &p), Err(Error::Generation(_))));
    }

    #[test]
    fn rejects_small_grids() {
        let p = MazeParams {
            width: 2,
            ..MazeParams::default()
        };
        assert!(generate_grid_maze(1, &p).unwrap_err().is_config());
    }
}
