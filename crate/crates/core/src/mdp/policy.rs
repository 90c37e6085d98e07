use rand::Rng;

use crate::error::{Error, Result};

/// Stochastic policy `π(a|s) ∝ exp(logit[s, a] / temperature)`.
///
/// Probabilities are strictly positive for finite logits, which keeps KL
/// divergence and entropy finite everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxPolicy {
    num_states: usize,
    num_actions: usize,
    logits: Vec<f64>,
    temperature: f64,
}

impl SoftmaxPolicy {
    /// All-zero logits at temperature 1.
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            logits: vec![0.0; num_states * num_actions],
            temperature: 1.0,
        }
    }

    /// Builds a policy from a row-major `(state, action)` logit table.
    pub fn from_logits(
        num_states: usize,
        num_actions: usize,
        logits: Vec<f64>,
        temperature: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::config("policy needs at least one state and one action"));
        }
        if logits.len() != num_states * num_actions {
            return Err(Error::config(format!(
                "logit table has {} entries, expected {}",
                logits.len(),
                num_states * num_actions
            )));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::config(format!("temperature {temperature} must be positive")));
        }
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::numerical("non-finite policy logit"));
        }
        Ok(Self {
            num_states,
            num_actions,
            logits,
            temperature,
        })
    }

    /// Builds a policy from explicit action probabilities (all must be positive).
    pub fn from_probabilities(num_actions: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut logits = Vec::with_capacity(rows.len() * num_actions);
        for row in rows {
            if row.len() != num_actions || row.iter().any(|&p| p <= 0.0) {
                return Err(Error::config("probability rows must be positive and full-width"));
            }
            logits.extend(row.iter().map(|p| p.ln()));
        }
        Self::from_logits(rows.len(), num_actions, logits, 1.0)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub(crate) fn logits_mut(&mut self) -> &mut [f64] {
        &mut self.logits
    }

    pub fn logit_row(&self, state: usize) -> &[f64] {
        let a = self.num_actions;
        &self.logits[state * a..(state + 1) * a]
    }

    pub(crate) fn logit_row_mut(&mut self, state: usize) -> &mut [f64] {
        let a = self.num_actions;
        &mut self.logits[state * a..(state + 1) * a]
    }

    /// Writes `log π(·|s)` into `out`.
    pub fn log_probs_into(&self, state: usize, out: &mut [f64]) {
        let row = self.logit_row(state);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &l| m.max(l));
        let mut z = 0.0;
        for (o, &l) in out.iter_mut().zip(row) {
            *o = (l - max) / self.temperature;
            z += o.exp();
        }
        let log_z = z.ln();
        for o in out.iter_mut() {
            *o -= log_z;
        }
    }

    pub fn log_probs(&self, state: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_actions];
        self.log_probs_into(state, &mut out);
        out
    }

    /// Writes `π(·|s)` into `out`.
    pub fn probs_into(&self, state: usize, out: &mut [f64]) {
        self.log_probs_into(state, out);
        for o in out.iter_mut() {
            *o = o.exp();
        }
    }

    pub fn probs(&self, state: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_actions];
        self.probs_into(state, &mut out);
        out
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs(state)[action]
    }

    /// Highest-logit action; ties resolve to the lowest index.
    pub fn greedy_action(&self, state: usize) -> usize {
        let row = self.logit_row(state);
        let mut best = 0;
        for (a, &l) in row.iter().enumerate() {
            if l > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let mut buf = [0.0f64; 16];
        let probs: Vec<f64>;
        let p: &[f64] = if self.num_actions <= buf.len() {
            self.probs_into(state, &mut buf[..self.num_actions]);
            &buf[..self.num_actions]
        } else {
            probs = self.probs(state);
            &probs
        };
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, &pa) in p.iter().enumerate() {
            acc += pa;
            if u < acc {
                return a;
            }
        }
        self.num_actions - 1
    }
}
