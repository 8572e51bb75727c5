//! Distills reinforcement-learning policies into decision-tree policies.
//!
//! The pipeline: train or load a teacher Q-function ([`teacher`]), collect a
//! transfer set of teacher-visited states annotated with per-action costs
//! ([`transfer`]), grow a binary tree under a cost-sensitive split criterion
//! ([`tree`]), and evaluate the result by cumulative return and state
//! distribution discrepancy ([`eval`]).

pub mod env;
pub mod error;
pub mod eval;
pub mod seeding;
pub mod teacher;
pub mod transfer;
pub mod tree;

pub use env::{Env, EnvSpec, Task, Transition};
pub use error::{Error, Result};
pub use eval::{MmdConfig, ReturnSummary};
pub use teacher::{SoftPolicyOutput, Teacher, TrainConfig};
pub use transfer::{CostMatrix, Objective, TransferSample};
pub use tree::{Criterion, Node, PolicyTree, SplitCandidate, TreeConfig};
