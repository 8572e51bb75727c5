//! Iterated offline distillation: collect fresh teacher data each
//! iteration, optionally aggregate and resample, grow a tree, score it,
//! and keep the best. One iteration without resampling reduces exactly to
//! a single collect-and-grow.

use super::{build_costs, collect, to_dataset, viper_resample, CollectMode, Objective};
use crate::error::{Error, Result};
use crate::eval::avg_return;
use crate::seeding::derive_seed;
use crate::teacher::Teacher;
use crate::tree::{grow, PolicyTree, TreeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct OfflineConfig {
    pub objective: Objective,
    /// Error-penalty weight; required exactly for the DpicR objective.
    pub alpha: Option<f64>,
    pub tree: TreeConfig,
    pub iterations: usize,
    pub samples_per_iter: usize,
    /// Keep earlier iterations' samples in the training pool.
    pub aggregate: bool,
    /// Resample the pool by value gap before growing (the "_M" behavior).
    pub resample: bool,
    pub mode: CollectMode,
    /// Episodes used to score each iteration's tree for best-so-far
    /// selection.
    pub eval_episodes: usize,
}

/// What one iteration produced.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Pool size the tree was grown on (after aggregation, before
    /// resampling changes nothing since resampling preserves size).
    pub dataset_size: usize,
    pub mean_return: f64,
    /// Running maximum of `mean_return` up to this iteration.
    pub best_so_far: f64,
}

#[derive(Debug, Clone)]
pub struct OfflineResult {
    /// The tree from the best-scoring iteration.
    pub tree: PolicyTree,
    pub best_iteration: usize,
    pub best_return: f64,
    pub records: Vec<IterationRecord>,
}

/// Seed labels, all derived from the loop seed: collection for iteration
/// `i` uses `derive_seed(seed, "offline-collect-<i>")`, resampling uses
/// `"offline-resample-<i>"`, and scoring uses `"offline-eval"` (shared
/// across iterations so scores are comparable).
pub fn offline_loop(teacher: &Teacher, cfg: &OfflineConfig, seed: u64) -> Result<OfflineResult> {
    if cfg.iterations == 0 {
        return Err(Error::contract("offline loop needs at least one iteration"));
    }
    if cfg.eval_episodes == 0 {
        return Err(Error::contract("offline loop needs at least one scoring episode"));
    }
    let task = teacher.task();
    let eval_seed = derive_seed(seed, "offline-eval");

    let mut pool = Vec::new();
    let mut best: Option<(usize, f64, PolicyTree)> = None;
    let mut records = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        let fresh = collect(
            teacher,
            cfg.samples_per_iter,
            cfg.mode,
            derive_seed(seed, &format!("offline-collect-{iter}")),
        )?;
        if cfg.aggregate {
            pool.extend(fresh);
        } else {
            pool = fresh;
        }

        let training = if cfg.resample {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("offline-resample-{iter}")));
            viper_resample(&pool, &mut rng)?
        } else {
            pool.clone()
        };

        let costs = build_costs(&training, cfg.objective, cfg.alpha)?;
        let data = to_dataset(&training, &costs)?;
        let tree = grow(&data, &cfg.tree)?;

        let summary = avg_return(task, |s| tree.predict(s), cfg.eval_episodes, eval_seed)?;
        let is_better = best
            .as_ref()
            .map(|(_, r, _)| summary.mean > *r)
            .unwrap_or(true);
        if is_better {
            best = Some((iter, summary.mean, tree));
        }
        let best_so_far = best.as_ref().map(|(_, r, _)| *r).unwrap();
        records.push(IterationRecord {
            iteration: iter,
            dataset_size: pool.len(),
            mean_return: summary.mean,
            best_so_far,
        });
    }

    let (best_iteration, best_return, tree) = best.unwrap();
    Ok(OfflineResult { tree, best_iteration, best_return, records })
}
