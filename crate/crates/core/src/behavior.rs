//! Per-step decisions: whether an agent may act on its belief yet, whether it
//! senses or broadcasts, when it commits, and what it broadcasts.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentError, AgentState, Role};
use crate::environment::Opinion;

/// Default quorum-convergence threshold.
pub const DEFAULT_THETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BroadcastPolicy {
    /// Fair coin.
    RandomChoice,
    /// Broadcast with probability `½[r_k + (1 − |Ω − γ|)]`.
    Parameterised,
}

impl BroadcastPolicy {
    pub fn name(self) -> &'static str {
        match self {
            BroadcastPolicy::RandomChoice => "random",
            BroadcastPolicy::Parameterised => "parameterised",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(BroadcastPolicy::RandomChoice),
            "parameterised" => Some(BroadcastPolicy::Parameterised),
            _ => None,
        }
    }
}

impl fmt::Display for BroadcastPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CommitPolicy {
    /// Commit with a fixed probability each step.
    RandomCommit { p: f64 },
    /// Commit once `γ` is within `theta` of 0 or 1.
    QuorumConvergence { theta: f64 },
}

impl CommitPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            CommitPolicy::RandomCommit { .. } => "random-commit",
            CommitPolicy::QuorumConvergence { .. } => "quorum",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            CommitPolicy::RandomCommit { p } => p,
            CommitPolicy::QuorumConvergence { theta } => theta,
        }
    }
}

impl fmt::Display for CommitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.parameter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activity {
    Sense,
    Broadcast,
}

/// True once the agent's observed ratio exceeds `1 / length`.
///
/// Evaluated in integers: `obs / (L·W) > 1 / L` ⇔ `obs · L > L · W`.
pub fn exploration_gate_open(agent: &AgentState, length: usize, width: usize) -> bool {
    agent.observation_count as u64 * length as u64 > (length * width) as u64
}

/// `½[r_k + (1 − |Ω − γ|)]`, clamped to `[0, 1]`.
pub fn parameterised_probability(observed_ratio: f64, opinion: Opinion, gamma: f64) -> f64 {
    let agreement = 1.0 - (opinion.value() - gamma).abs();
    (0.5 * (observed_ratio + agreement)).clamp(0.0, 1.0)
}

pub fn broadcast_probability(
    agent: &AgentState,
    length: usize,
    width: usize,
) -> Result<f64, AgentError> {
    Ok(parameterised_probability(
        agent.observed_ratio(length, width),
        agent.current_opinion()?,
        agent.gamma,
    ))
}

pub fn choose_sense_or_broadcast<R: Rng + ?Sized>(
    policy: BroadcastPolicy,
    agent: &AgentState,
    grid: (usize, usize),
    rng: &mut R,
) -> Result<Activity, AgentError> {
    let p = match policy {
        BroadcastPolicy::RandomChoice => 0.5,
        BroadcastPolicy::Parameterised => broadcast_probability(agent, grid.0, grid.1)?,
    };
    Ok(if rng.random::<f64>() < p {
        Activity::Broadcast
    } else {
        Activity::Sense
    })
}

pub fn should_commit<R: Rng + ?Sized>(
    policy: &CommitPolicy,
    agent: &AgentState,
    rng: &mut R,
) -> bool {
    match *policy {
        CommitPolicy::RandomCommit { p } => rng.random::<f64>() < p,
        CommitPolicy::QuorumConvergence { theta } => {
            agent.gamma < theta || 1.0 - agent.gamma < theta
        }
    }
}

/// Opinion an agent sends when it broadcasts.
pub fn broadcast_value(agent: &AgentState, correct: Opinion) -> Result<Opinion, AgentError> {
    match agent.role {
        Role::Malicious => Ok(correct.opposite()),
        Role::Regular => match agent.committed() {
            Some(c) => Ok(c.final_opinion),
            None => agent.current_opinion(),
        },
    }
}
