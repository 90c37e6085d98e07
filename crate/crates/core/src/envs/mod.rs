//! Seeded task families and task pools.

pub mod cartpole;
pub mod maze;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::seed;

pub use cartpole::{generate_cartpole, CartPoleParams};
pub use maze::{generate_grid_maze, MazeParams};

pub const POOL_SCHEMA: &str = "itts.pool/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GridMaze,
    DiscretizedCartPole,
}

/// Generator parameters, tagged by family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FamilyParams {
    GridMaze(MazeParams),
    DiscretizedCartPole(CartPoleParams),
}

impl FamilyParams {
    pub fn family(&self) -> Family {
        match self {
            FamilyParams::GridMaze(_) => Family::GridMaze,
            FamilyParams::DiscretizedCartPole(_) => Family::DiscretizedCartPole,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FamilyParams::GridMaze(p) => p.validate(),
            FamilyParams::DiscretizedCartPole(p) => p.validate(),
        }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            FamilyParams::GridMaze(_) => maze::NUM_ACTIONS,
            FamilyParams::DiscretizedCartPole(_) => 2,
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            FamilyParams::GridMaze(p) => p.num_states(),
            FamilyParams::DiscretizedCartPole(p) => p.num_states(),
        }
    }
}

/// A task is fully determined by its family parameters and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(flatten)]
    pub family_params: FamilyParams,
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(family_params: FamilyParams, seed: u64) -> Self {
        Self {
            family_params,
            seed,
        }
    }

    pub fn family(&self) -> Family {
        self.family_params.family()
    }

    pub fn build(&self) -> Result<TabularMdp> {
        match &self.family_params {
            FamilyParams::GridMaze(p) => generate_grid_maze(self.seed, p),
            FamilyParams::DiscretizedCartPole(p) => generate_cartpole(self.seed, p),
        }
    }
}

/// Training, validation and test tasks drawn from one seeded family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPool {
    pub schema_version: String,
    pub family: Family,
    pub master_seed: u64,
    pub training: Vec<TaskSpec>,
    pub validation: Vec<TaskSpec>,
    pub test: Vec<TaskSpec>,
}

impl TaskPool {
    pub fn all_specs(&self) -> impl Iterator<Item = &TaskSpec> {
        self.training.iter().chain(&self.validation).chain(&self.test)
    }

    /// Checks disjointness, family membership and shared dimensions.
    pub fn check(&self) -> Result<()> {
        let specs: Vec<&TaskSpec> = self.all_specs().collect();
        for (i, a) in specs.iter().enumerate() {
            if a.family() != self.family {
                return Err(Error::config("pool mixes task families"));
            }
            if specs[i + 1..].iter().any(|b| b.seed == a.seed) {
                return Err(Error::config(format!("task seed {} appears twice in pool", a.seed)));
            }
        }
        let dims: Vec<(usize, usize)> = specs
            .iter()
            .map(|s| (s.family_params.num_states(), s.family_params.num_actions()))
            .collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::config("pool tasks do not share state/action dimensions"));
        }
        Ok(())
    }
}

const DUPLICATE_RETRIES: usize = 1000;

/// Draws `train + validation + test` distinct tasks from derived seeds.
///
/// A candidate whose dynamics table equals an already accepted task is
/// skipped and the next derived seed is tried.
pub fn build_task_pool(
    family_params: &FamilyParams,
    train_count: usize,
    validation_count: usize,
    test_count: usize,
    master_seed: u64,
) -> Result<TaskPool> {
    if train_count == 0 || validation_count == 0 || test_count == 0 {
        return Err(Error::config("task pool counts must all be at least 1"));
    }
    family_params.validate()?;
    let needed = train_count + validation_count + test_count;
    let mut accepted: Vec<TabularMdp> = Vec::with_capacity(needed);
    let mut specs: Vec<TaskSpec> = Vec::with_capacity(needed);
    let mut index = 0u64;
    let mut skipped = 0usize;
    while specs.len() < needed {
        let spec = TaskSpec::new(
            family_params.clone(),
            seed::derive(master_seed, &[seed::tag("task"), index]),
        );
        index += 1;
        let mdp = spec.build()?;
        if let Some(first) = accepted.first() {
            if !first.same_shape(&mdp) {
                return Err(Error::Generation("generator produced mismatched dimensions".into()));
            }
        }
        if accepted.iter().any(|m| m == &mdp) {
            skipped += 1;
            if skipped > DUPLICATE_RETRIES {
                return Err(Error::Generation(format!(
                    "could not find {needed} distinct tasks after {skipped} duplicates"
                )));
            }
            continue;
        }
        accepted.push(mdp);
        specs.push(spec);
    }
    let test = specs.split_off(train_count + validation_count);
    let validation = specs.split_off(train_count);
    let pool = TaskPool {
        schema_version: POOL_SCHEMA.to_string(),
        family: family_params.family(),
        master_seed,
        training: specs,
        validation,
        test,
    };
    pool.check()?;
    Ok(pool)
}
