//! Policy evaluation: episodic return summaries and the multi-kernel
//! maximum mean discrepancy between visited-state distributions.

mod mmd;

pub use mmd::{mmd, Estimator, MmdConfig};

use crate::env::{Env, Task};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::teacher::Teacher;
use crate::transfer::rollout;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Returns of a batch of evaluation episodes. `std` is the population
/// standard deviation, so a single episode reports 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSummary {
    pub mean: f64,
    pub std: f64,
    pub per_episode: Vec<f64>,
    pub episodes: usize,
    pub seed: u64,
}

/// Runs `episodes` full episodes of `policy`; episode `i` resets with seed
/// `seed + i` (wrapping), so a summary is reproducible bit-for-bit.
pub fn avg_return<F>(task: Task, mut policy: F, episodes: usize, seed: u64) -> Result<ReturnSummary>
where
    F: FnMut(&[f64]) -> usize,
{
    if episodes == 0 {
        return Err(Error::contract("episode count must be positive"));
    }
    let mut env = Env::new(task);
    let mut per_episode = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut state = env.reset(seed.wrapping_add(ep as u64));
        let mut total = 0.0;
        loop {
            let tr = env.step(policy(&state))?;
            total += tr.reward;
            if tr.done || tr.truncated {
                break;
            }
            state = tr.next_state;
        }
        per_episode.push(total);
    }
    let n = episodes as f64;
    let mean = per_episode.iter().sum::<f64>() / n;
    let var = per_episode.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(ReturnSummary { mean, std: var.sqrt(), per_episode, episodes, seed })
}

/// State-distribution discrepancy between a student policy and its
/// teacher: rolls out both, caps each side at `cfg.m` states (subsampling
/// without replacement when a rollout overshoots), and returns their MMD.
pub fn consistency_report<F>(
    task: Task,
    policy: F,
    teacher: &Teacher,
    cfg: &MmdConfig,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> usize,
{
    let student = rollout_states(task, policy, cfg.m, derive_seed(seed, "consistency-student"))?;
    let teacher_states = rollout_states(
        task,
        |s| teacher.act_greedy(s),
        cfg.m,
        derive_seed(seed, "consistency-teacher"),
    )?;
    mmd(&student, &teacher_states, cfg)
}

/// Visited states of whole-episode rollouts, subsampled without
/// replacement down to exactly `m` when the episodes overshoot.
fn rollout_states<F>(task: Task, policy: F, m: usize, seed: u64) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> usize,
{
    let roll = rollout(task, policy, m, seed)?;
    let mut states: Vec<Vec<f64>> = roll.steps.into_iter().map(|s| s.state).collect();
    if states.len() > m {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "state-subsample"));
        // Partial Fisher-Yates: the first m entries are a uniform
        // without-replacement draw.
        let (picked, _) = states.partial_shuffle(&mut rng, m);
        let mut out = picked.to_vec();
        out.truncate(m);
        states = out;
    }
    Ok(states)
}
