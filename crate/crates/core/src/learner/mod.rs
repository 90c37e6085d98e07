//! Tabular learners: train to convergence, fine-tune a transferred policy,
//! and execute a policy to collect visited states.

mod boltzmann_q;
mod gradient;
mod reinforce;

use serde::{Deserialize, Serialize};

use crate::envs::TaskSpec;
use crate::error::{Error, Result};
use crate::mdp::{rollout_with_rng, SoftmaxPolicy, TabularMdp};
use crate::seed;

pub use gradient::{exact_policy_gradient, reinforce_gradient_estimate};

pub const TRAINED_TASK_SCHEMA: &str = "itts.trained_task/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    TabularReinforce,
    BoltzmannQ,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    /// Logit step size (REINFORCE) or Q-value step size (Boltzmann Q).
    pub step_size: f64,
    /// Step size of the tabular state-value baseline used by REINFORCE.
    pub baseline_step_size: f64,
    pub episodes_per_epoch: usize,
    pub convergence_window: usize,
    pub convergence_tolerance: f64,
    pub max_epochs: usize,
    pub entropy_regularizer: f64,
    /// Boltzmann temperature for Q-learning behaviour and extraction.
    pub q_temperature: f64,
    pub rng_seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::TabularReinforce,
            step_size: 0.1,
            baseline_step_size: 0.2,
            episodes_per_epoch: 10,
            convergence_window: 20,
            convergence_tolerance: 0.001,
            max_epochs: 2000,
            entropy_regularizer: 1e-3,
            q_temperature: 0.1,
            rng_seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return Err(Error::config("step_size must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.baseline_step_size) {
            return Err(Error::config("baseline_step_size must lie in [0, 1]"));
        }
        if self.episodes_per_epoch == 0 || self.max_epochs == 0 {
            return Err(Error::config("episodes_per_epoch and max_epochs must be positive"));
        }
        if self.convergence_window < 2 {
            return Err(Error::config("convergence_window must be at least 2"));
        }
        if !(self.convergence_tolerance > 0.0) {
            return Err(Error::config("convergence_tolerance must be positive"));
        }
        if !(self.entropy_regularizer >= 0.0) {
            return Err(Error::config("entropy_regularizer must be non-negative"));
        }
        if !(self.q_temperature > 0.0) {
            return Err(Error::config("q_temperature must be positive"));
        }
        Ok(())
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self {
            rng_seed,
            ..self.clone()
        }
    }

    pub fn with_step_size(&self, step_size: f64) -> Self {
        Self {
            step_size,
            ..self.clone()
        }
    }
}

/// Outcome of [`train_to_convergence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergedPolicy {
    pub policy: SoftmaxPolicy,
    /// Moving-average epoch return over the final convergence window.
    pub mean_return: f64,
    pub episodes_used: usize,
    pub epochs: usize,
    pub converged: bool,
}

/// Per-state entropy statistics of a trained policy over reachable transient states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyBounds {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// A training task together with its converged policy `π*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedTask {
    pub schema_version: String,
    /// Absent for hand-built tasks that do not come from a generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<TaskSpec>,
    pub optimal_policy: SoftmaxPolicy,
    pub mean_return_at_convergence: f64,
    pub training_episodes_used: usize,
    pub converged: bool,
    pub learner: LearnerConfig,
    pub entropy: EntropyBounds,
}

impl TrainedTask {
    /// Builds the task from its spec and trains it.
    pub fn train(spec: &TaskSpec, config: &LearnerConfig) -> Result<Self> {
        let mdp = spec.build()?;
        Self::from_mdp(Some(spec.clone()), &mdp, config)
    }

    pub fn from_mdp(spec: Option<TaskSpec>, mdp: &TabularMdp, config: &LearnerConfig) -> Result<Self> {
        let outcome = train_to_convergence(mdp, config)?;
        Ok(Self::from_policy(spec, mdp, outcome, config))
    }

    pub fn from_policy(
        spec: Option<TaskSpec>,
        mdp: &TabularMdp,
        outcome: ConvergedPolicy,
        config: &LearnerConfig,
    ) -> Self {
        let entropy = entropy_bounds(&outcome.policy, &mdp.reachable_transient_states());
        Self {
            schema_version: TRAINED_TASK_SCHEMA.to_string(),
            spec,
            optimal_policy: outcome.policy,
            mean_return_at_convergence: outcome.mean_return,
            training_episodes_used: outcome.episodes_used,
            converged: outcome.converged,
            learner: config.clone(),
            entropy,
        }
    }
}

fn entropy_bounds(policy: &SoftmaxPolicy, states: &[usize]) -> EntropyBounds {
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for &s in states {
        let h = -policy.probs(s).iter().map(|p| p * p.ln()).sum::<f64>();
        min = min.min(h);
        max = max.max(h);
        sum += h;
    }
    if states.is_empty() {
        min = 0.0;
    }
    EntropyBounds {
        min,
        mean: sum / states.len().max(1) as f64,
        max,
    }
}

/// Per-run learner state; one implementation per [`Algorithm`].
trait Agent {
    /// Samples one episode, updates, and returns the episode's return.
    fn episode(&mut self, mdp: &TabularMdp, rng: &mut seed::Rng) -> Result<f64>;
    fn policy(&self) -> SoftmaxPolicy;
}

fn make_agent(start: SoftmaxPolicy, config: &LearnerConfig) -> Box<dyn Agent> {
    match config.algorithm {
        Algorithm::TabularReinforce => Box::new(reinforce::Reinforce::new(start, config)),
        Algorithm::BoltzmannQ => Box::new(boltzmann_q::BoltzmannQ::new(start, config)),
    }
}

/// Trains from a uniform policy until the windowed mean epoch return stops
/// moving by more than `convergence_tolerance`, or `max_epochs` is reached.
pub fn train_to_convergence(mdp: &TabularMdp, config: &LearnerConfig) -> Result<ConvergedPolicy> {
    config.validate()?;
    let start = SoftmaxPolicy::uniform(mdp.num_states(), mdp.num_actions());
    let mut agent = make_agent(start, config);
    let mut rng = seed::rng(config.rng_seed);
    let window = config.convergence_window;

    let mut epoch_returns: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut episodes = 0;
    while epoch_returns.len() < config.max_epochs {
        if mdp.num_actions() == 1 {
            // Nothing to learn; the only policy is already optimal.
            converged = true;
            let ret = (0..config.episodes_per_epoch)
                .map(|_| rollout_with_rng(mdp, &agent.policy(), &mut rng).return_value)
                .sum::<f64>();
            epoch_returns.push(ret / config.episodes_per_epoch as f64);
            episodes += config.episodes_per_epoch;
            break;
        }
        let mut total = 0.0;
        for _ in 0..config.episodes_per_epoch {
            total += agent.episode(mdp, &mut rng)?;
        }
        episodes += config.episodes_per_epoch;
        epoch_returns.push(total / config.episodes_per_epoch as f64);

        let n = epoch_returns.len();
        if n >= 2 * window {
            let recent = epoch_returns[n - window..].iter().sum::<f64>() / window as f64;
            let before = epoch_returns[n - 2 * window..n - window].iter().sum::<f64>() / window as f64;
            if (recent - before).abs() < config.convergence_tolerance {
                converged = true;
                break;
            }
        }
    }
    let n = epoch_returns.len();
    let tail = &epoch_returns[n.saturating_sub(window)..];
    Ok(ConvergedPolicy {
        policy: agent.policy(),
        mean_return: tail.iter().sum::<f64>() / tail.len() as f64,
        episodes_used: episodes,
        epochs: n,
        converged,
    })
}

/// Runs exactly `episodes` learning episodes starting from a copy of `start`.
pub fn fine_tune(
    start: &SoftmaxPolicy,
    mdp: &TabularMdp,
    episodes: usize,
    config: &LearnerConfig,
) -> Result<SoftmaxPolicy> {
    Ok(fine_tune_with_returns(start, mdp, episodes, config)?.0)
}

/// Like [`fine_tune`], also reporting the return of every learning episode.
pub fn fine_tune_with_returns(
    start: &SoftmaxPolicy,
    mdp: &TabularMdp,
    episodes: usize,
    config: &LearnerConfig,
) -> Result<(SoftmaxPolicy, Vec<f64>)> {
    config.validate()?;
    mdp.check_policy(start)?;
    if episodes == 0 {
        return Err(Error::config("fine-tuning needs at least one episode"));
    }
    let mut agent = make_agent(start.clone(), config);
    let mut rng = seed::rng(config.rng_seed);
    let returns = (0..episodes)
        .map(|_| agent.episode(mdp, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok((agent.policy(), returns))
}

/// Runs whole episodes under `policy` until at least `count` transient-state
/// visits are collected and returns the first `count` visited states.
pub fn execute_policy(
    policy: &SoftmaxPolicy,
    mdp: &TabularMdp,
    count: usize,
    rng_seed: u64,
) -> Result<Vec<usize>> {
    mdp.check_policy(policy)?;
    if count == 0 {
        return Err(Error::config("target state count must be at least 1"));
    }
    let mut rng = seed::rng(rng_seed);
    let mut states = Vec::with_capacity(count);
    let mut empty_streak = 0;
    while states.len() < count {
        let t = rollout_with_rng(mdp, policy, &mut rng);
        if t.is_empty() {
            empty_streak += 1;
            if empty_streak >= 100 {
                return Err(Error::config("policy execution never visits a transient state"));
            }
            continue;
        }
        empty_streak = 0;
        states.extend(t.steps.iter().map(|s| s.state));
    }
    states.truncate(count);
    Ok(states)
}
