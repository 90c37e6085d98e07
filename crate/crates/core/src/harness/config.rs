use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::{CartPoleParams, Family, FamilyParams, MazeParams};
use crate::error::{Error, Result};
use crate::learner::LearnerConfig;
use crate::meta::MetaConfig;
use crate::select::SelectionConfig;

/// Task pool shape and generator parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoolConfig {
    pub family: Family,
    pub training_tasks: usize,
    pub validation_tasks: usize,
    pub test_tasks: usize,
    pub master_seed: u64,
    pub maze: MazeParams,
    pub cartpole: CartPoleParams,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self::for_family(Family::GridMaze)
    }
}

impl PoolConfig {
    pub fn for_family(family: Family) -> Self {
        let (training_tasks, validation_tasks) = match family {
            Family::GridMaze => (12, 4),
            Family::DiscretizedCartPole => (16, 5),
        };
        Self {
            family,
            training_tasks,
            validation_tasks,
            test_tasks: 5,
            master_seed: 0,
            maze: MazeParams::default(),
            cartpole: CartPoleParams::default(),
        }
    }

    pub fn family_params(&self) -> FamilyParams {
        match self.family {
            Family::GridMaze => FamilyParams::GridMaze(self.maze.clone()),
            Family::DiscretizedCartPole => FamilyParams::DiscretizedCartPole(self.cartpole.clone()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    /// Fine-tuning episodes per test task; the family default when absent.
    pub adaptation_episodes: Option<usize>,
    pub eval_seeds: usize,
}

impl EvaluationConfig {
    pub fn episodes_for(&self, family: Family) -> usize {
        self.adaptation_episodes.unwrap_or(match family {
            Family::GridMaze => 50,
            Family::DiscretizedCartPole => 200,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 0.025, 0.05, 0.1, 0.2, 0.4],
        }
    }
}

/// A way of choosing the meta-training set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Baseline {
    Itts,
    AllTasks,
    RandomSubset {
        /// Fixed subset size; uniform over `1..=T` per draw when absent.
        #[serde(default)]
        count: Option<usize>,
        #[serde(default = "default_num_draws")]
        num_draws: usize,
    },
    ValidationAsTraining,
    DifferenceOnly,
    RelevanceOnly,
}

fn default_num_draws() -> usize {
    4
}

impl Baseline {
    pub fn random_subset() -> Self {
        Baseline::RandomSubset {
            count: None,
            num_draws: default_num_draws(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Baseline::Itts => "itts".into(),
            Baseline::AllTasks => "all_tasks".into(),
            Baseline::RandomSubset { count: None, .. } => "random_subset".into(),
            Baseline::RandomSubset { count: Some(c), .. } => format!("random_subset_{c}"),
            Baseline::ValidationAsTraining => "validation_as_training".into(),
            Baseline::DifferenceOnly => "difference_only".into(),
            Baseline::RelevanceOnly => "relevance_only".into(),
        }
    }

    pub fn full_set() -> Vec<Baseline> {
        vec![
            Baseline::Itts,
            Baseline::AllTasks,
            Baseline::random_subset(),
            Baseline::ValidationAsTraining,
            Baseline::DifferenceOnly,
            Baseline::RelevanceOnly,
        ]
    }

    pub fn ablation_set() -> Vec<Baseline> {
        vec![
            Baseline::DifferenceOnly,
            Baseline::RelevanceOnly,
            Baseline::Itts,
            Baseline::AllTasks,
        ]
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Everything one experiment depends on.
///
/// `output_dir` and `workers` affect where and how fast results are produced
/// but never their values, so they are left out of serialized reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub pool: PoolConfig,
    pub learner: LearnerConfig,
    pub selection: SelectionConfig,
    pub meta: MetaConfig,
    pub evaluation: EvaluationConfig,
    pub sweep: SweepConfig,
    pub baselines: Vec<Baseline>,
    pub runs: usize,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_family(Family::GridMaze)
    }
}

impl ExperimentConfig {
    pub fn for_family(family: Family) -> Self {
        Self {
            pool: PoolConfig::for_family(family),
            learner: LearnerConfig::default(),
            selection: SelectionConfig::default(),
            meta: MetaConfig::default(),
            evaluation: EvaluationConfig {
                adaptation_episodes: None,
                eval_seeds: 5,
            },
            sweep: SweepConfig::default(),
            baselines: Baseline::full_set(),
            runs: 5,
            output_dir: None,
            workers: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(format!("cannot render config: {e}")))
    }

    pub fn adaptation_episodes(&self) -> usize {
        self.evaluation.episodes_for(self.pool.family)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.pool.training_tasks == 0 || self.pool.validation_tasks == 0 || self.pool.test_tasks == 0 {
            return Err(Error::config("task pool counts must all be at least 1"));
        }
        self.pool.family_params().validate()?;
        self.learner.validate()?;
        self.selection.validate()?;
        if self.adaptation_episodes() == 0 || self.evaluation.eval_seeds == 0 {
            return Err(Error::config("adaptation_episodes and eval_seeds must be positive"));
        }
        // Batch size is checked per task set, after clamping to its size.
        self.meta.validate(usize::MAX)?;
        if self.baselines.is_empty() {
            return Err(Error::config("at least one baseline is required"));
        }
        let mut labels = BTreeSet::new();
        for b in &self.baselines {
            if !labels.insert(b.label()) {
                return Err(Error::config(format!("baseline `{b}` listed twice")));
            }
            if let Baseline::RandomSubset { count, num_draws } = b {
                if *num_draws == 0 {
                    return Err(Error::config("random_subset needs num_draws >= 1"));
                }
                if let Some(c) = count {
                    if *c == 0 || *c > self.pool.training_tasks {
                        return Err(Error::config(format!(
                            "random_subset count {c} is outside 1..={}",
                            self.pool.training_tasks
                        )));
                    }
                }
            }
        }
        for &e in &self.sweep.epsilons {
            if !(e >= 0.0) {
                return Err(Error::config("sweep epsilons must be non-negative"));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_roundtrip_through_toml() {
        for family in [Family::GridMaze, Family::DiscretizedCartPole] {
            let config = ExperimentConfig::for_family(family);
            config.validate().unwrap();
            let text = config.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), config);
        }
    }

    #[test]
    fn parses_a_hand_written_config() {
        let config = ExperimentConfig::from_toml(
            r#"
            runs = 2
            baselines = ["itts", "all_tasks", { random_subset = { num_draws = 2 } }]

            [pool]
            family = "grid_maze"
            training_tasks = 6

            [pool.maze]
            wall_density = 0.1

            [selection]
            epsilon = 0.3

            [evaluation]
            eval_seeds = 2
            "#,
        )
        .unwrap();
        assert_eq!(config.runs, 2);
        assert_eq!(config.pool.training_tasks, 6);
        assert_eq!(config.pool.maze.wall_density, 0.1);
        assert_eq!(config.baselines[2], Baseline::RandomSubset { count: None, num_draws: 2 });
        assert_eq!(config.adaptation_episodes(), 50);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        for text in [
            "runz = 3",
            "[pool]\nfamilly = \"grid_maze\"",
            "runs = 0",
            "baselines = [\"itts\", \"itts\"]",
            "baselines = [{ random_subset = { count = 99 } }]",
            "[meta]\nmeta_step_size = 2.0",
        ] {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert!(err.is_config(), "{text}: {err}");
        }
    }

    #[test]
    fn output_dir_is_not_serialized() {
        let config = ExperimentConfig {
            output_dir: Some("somewhere".into()),
            workers: Some(3),
            ..ExperimentConfig::default()
        };
        assert!(!serde_json::to_string(&config).unwrap().contains("somewhere"));
    }
}
