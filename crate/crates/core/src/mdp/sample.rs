use rand::Rng;

use super::TabularMdp;
use crate::error::{Error, Result};
use crate::seed;

/// Draws `count` states uniformly, with replacement, from the reachable
/// transient states of `mdp`.
pub fn sample_states(mdp: &TabularMdp, count: usize, rng_seed: u64) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::config("state sample count must be at least 1"));
    }
    let candidates = mdp.reachable_transient_states();
    if candidates.is_empty() {
        return Err(Error::config("MDP has no reachable transient states"));
    }
    let mut rng = seed::rng(rng_seed);
    Ok((0..count)
        .map(|_| candidates[rng.gen_range(0..candidates.len())])
        .collect())
}
