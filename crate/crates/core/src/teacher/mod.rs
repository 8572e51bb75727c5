//! Teacher policies: an abstract Q-function over states plus the
//! maximum-entropy conversions between Q, V, and the action distribution.
//!
//! Two concrete teachers exist: a tabular soft-Q learner over a uniform
//! state discretization, and a feed-forward network loaded from a weights
//! file. The distillation pipeline only ever consumes Q-vectors, so
//! anything that yields one per state can stand in as a teacher.

mod network;
mod soft;
mod tabular;

pub use network::{Activation, NetworkWeights};
pub use soft::{
    advantage, argmax, q_from_policy, soft_policy, soft_value, soft_value_with_temperature,
    softmax_policy, SoftPolicyOutput,
};
pub use tabular::{train_tabular_soft_q, Discretizer, TabularTeacher, TrainConfig};

use crate::env::{EnvSpec, Task};
use crate::error::{Error, Result};
use std::path::Path;

/// A policy exposed through its state-action value function.
#[derive(Debug, Clone)]
pub enum Teacher {
    Tabular(TabularTeacher),
    Network { weights: NetworkWeights, task: Task },
}

impl Teacher {
    pub fn task(&self) -> Task {
        match self {
            Teacher::Tabular(t) => t.task,
            Teacher::Network { task, .. } => *task,
        }
    }

    pub fn spec(&self) -> EnvSpec {
        self.task().spec()
    }

    /// Q-vector for one observation; always `n_actions` long and finite.
    pub fn q_values(&self, obs: &[f64]) -> Vec<f64> {
        match self {
            Teacher::Tabular(t) => t.q_values(obs),
            Teacher::Network { weights, .. } => weights.forward(obs),
        }
    }

    /// The teacher's action: argmax of the Q-vector, ties to the lowest index.
    pub fn act_greedy(&self, obs: &[f64]) -> usize {
        argmax(&self.q_values(obs))
    }

    /// Policy, value, and advantage under the maximum-entropy model.
    pub fn soft_output(&self, obs: &[f64]) -> Result<SoftPolicyOutput> {
        soft_policy(&self.q_values(obs))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            Teacher::Tabular(t) => t.save(path),
            Teacher::Network { weights, .. } => weights.save(path),
        }
    }

    /// The weights-file body without any header comments.
    pub fn to_text(&self) -> String {
        match self {
            Teacher::Tabular(t) => t.to_text(),
            Teacher::Network { weights, .. } => weights.to_text(),
        }
    }
}

/// Loads a network teacher from a weights file (see [`NetworkWeights`] for
/// the format) and checks its shape against the task.
pub fn load_network(path: &Path, task: Task) -> Result<Teacher> {
    let weights = NetworkWeights::load(path)?;
    let spec = task.spec();
    if weights.input_dim() != spec.obs_dim {
        return Err(Error::parse(
            path.display().to_string(),
            format!(
                "network input dim {} does not match {} obs dim {}",
                weights.input_dim(),
                task,
                spec.obs_dim
            ),
        ));
    }
    if weights.output_dim() != spec.n_actions {
        return Err(Error::parse(
            path.display().to_string(),
            format!(
                "network output dim {} does not match {} action count {}",
                weights.output_dim(),
                task,
                spec.n_actions
            ),
        ));
    }
    Ok(Teacher::Network { weights, task })
}

/// Loads either teacher kind, sniffing the format from the first
/// non-comment token (`tabular` vs. an activation name).
pub fn load_teacher(path: &Path, task: Task) -> Result<Teacher> {
    let text = std::fs::read_to_string(path)?;
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    if first.starts_with("tabular") {
        let t = TabularTeacher::load(path)?;
        if t.task != task {
            return Err(Error::parse(
                path.display().to_string(),
                format!("teacher was trained for {}, requested {task}", t.task),
            ));
        }
        Ok(Teacher::Tabular(t))
    } else {
        load_network(path, task)
    }
}
