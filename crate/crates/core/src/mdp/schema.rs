//! JSON documents for persisting MDPs and policies between pipeline stages.
//!
//! Tables are row-major over `(state, action)` and every document carries
//! explicit dimensions and a schema version.

use serde::{Deserialize, Serialize};

use super::{SoftmaxPolicy, TabularMdp, Transition};
use crate::error::{Error, Result};

pub const MDP_SCHEMA: &str = "itts.mdp/1";
pub const POLICY_SCHEMA: &str = "itts.policy/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub schema_version: String,
    pub num_states: usize,
    pub num_actions: usize,
    pub discount: f64,
    pub max_episode_steps: usize,
    pub initial_dist: Vec<f64>,
    pub absorbing: Vec<usize>,
    /// `dynamics[s * num_actions + a]` = outcomes of `(s, a)`.
    pub dynamics: Vec<Vec<Transition>>,
}

impl From<&TabularMdp> for MdpDocument {
    fn from(mdp: &TabularMdp) -> Self {
        Self {
            schema_version: MDP_SCHEMA.to_string(),
            num_states: mdp.num_states(),
            num_actions: mdp.num_actions(),
            discount: mdp.discount(),
            max_episode_steps: mdp.max_episode_steps(),
            initial_dist: mdp.initial_dist().to_vec(),
            absorbing: mdp.absorbing_states(),
            dynamics: mdp.dynamics().to_vec(),
        }
    }
}

impl TryFrom<MdpDocument> for TabularMdp {
    type Error = Error;

    fn try_from(doc: MdpDocument) -> Result<Self> {
        if doc.schema_version != MDP_SCHEMA {
            return Err(Error::config(format!(
                "unsupported MDP schema `{}`",
                doc.schema_version
            )));
        }
        TabularMdp::new(
            doc.num_states,
            doc.num_actions,
            doc.dynamics,
            doc.discount,
            doc.initial_dist,
            &doc.absorbing,
            doc.max_episode_steps,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub schema_version: String,
    pub num_states: usize,
    pub num_actions: usize,
    pub temperature: f64,
    pub logits: Vec<f64>,
}

impl From<&SoftmaxPolicy> for PolicyDocument {
    fn from(p: &SoftmaxPolicy) -> Self {
        Self {
            schema_version: POLICY_SCHEMA.to_string(),
            num_states: p.num_states(),
            num_actions: p.num_actions(),
            temperature: p.temperature(),
            logits: p.logits().to_vec(),
        }
    }
}

impl TryFrom<PolicyDocument> for SoftmaxPolicy {
    type Error = Error;

    fn try_from(doc: PolicyDocument) -> Result<Self> {
        if doc.schema_version != POLICY_SCHEMA {
            return Err(Error::config(format!(
                "unsupported policy schema `{}`",
                doc.schema_version
            )));
        }
        SoftmaxPolicy::from_logits(doc.num_states, doc.num_actions, doc.logits, doc.temperature)
    }
}

impl Serialize for SoftmaxPolicy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PolicyDocument::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SoftmaxPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = PolicyDocument::deserialize(deserializer)?;
        SoftmaxPolicy::try_from(doc).map_err(serde::de::Error::custom)
    }
}

impl Serialize for TabularMdp {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MdpDocument::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TabularMdp {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = MdpDocument::deserialize(deserializer)?;
        TabularMdp::try_from(doc).map_err(serde::de::Error::custom)
    }
}
