//! Shared plumbing between `distill` and `grid`: one distillation run,
//! plus the reproducibility headers every artifact embeds.

use crate::algo::Algorithm;
use advtree_core::transfer::{
    build_costs, collect, offline_loop, to_dataset, CollectMode, OfflineConfig, OfflineResult,
    TransferSample,
};
use advtree_core::tree::grow;
use advtree_core::{PolicyTree, Teacher, TreeConfig};
use anyhow::{bail, Result};
use std::fmt::Display;
use std::fmt::Write as _;
use std::path::Path;

/// Everything one distillation run needs besides the teacher and seed.
#[derive(Debug, Clone)]
pub struct DistillSpec {
    pub algorithm: Algorithm,
    pub alpha: Option<f64>,
    pub max_nodes: usize,
    pub n_samples: usize,
    /// Rounds of the collect/resample/grow loop; only `..M` algorithms
    /// read it.
    pub iterations: usize,
    /// Episodes scoring each loop iteration for best-so-far selection.
    pub eval_episodes: usize,
    pub mode: CollectMode,
}

pub fn check_alpha(algorithm: Algorithm, alpha: Option<f64>) -> Result<()> {
    match (algorithm.takes_alpha(), alpha) {
        (true, None) => bail!("{algorithm} requires an alpha"),
        (false, Some(a)) => bail!("{algorithm} does not take an alpha (got {a})"),
        _ => Ok(()),
    }
}

/// Grows one tree from an already-collected transfer set.
pub fn grow_from_samples(
    samples: &[TransferSample],
    algorithm: Algorithm,
    alpha: Option<f64>,
    max_nodes: usize,
) -> Result<PolicyTree> {
    let costs = build_costs(samples, algorithm.objective(), alpha)?;
    let data = to_dataset(samples, &costs)?;
    Ok(grow(&data, &TreeConfig { criterion: algorithm.criterion(), max_nodes })?)
}

pub enum Distilled {
    Single(PolicyTree),
    Looped(OfflineResult),
}

impl Distilled {
    pub fn into_tree(self) -> PolicyTree {
        match self {
            Distilled::Single(tree) => tree,
            Distilled::Looped(result) => result.tree,
        }
    }
}

/// Runs one distillation against a live teacher: a single collect-and-grow
/// pass, or the iterated loop for the `..M` algorithms.
pub fn distill_from_teacher(
    teacher: &Teacher,
    spec: &DistillSpec,
    seed: u64,
) -> Result<Distilled> {
    check_alpha(spec.algorithm, spec.alpha)?;
    if spec.algorithm.iterative() {
        let cfg = OfflineConfig {
            objective: spec.algorithm.objective(),
            alpha: spec.alpha,
            tree: TreeConfig { criterion: spec.algorithm.criterion(), max_nodes: spec.max_nodes },
            iterations: spec.iterations,
            samples_per_iter: spec.n_samples,
            aggregate: false,
            resample: true,
            mode: spec.mode,
            eval_episodes: spec.eval_episodes,
        };
        Ok(Distilled::Looped(offline_loop(teacher, &cfg, seed)?))
    } else {
        let samples = collect(teacher, spec.n_samples, spec.mode, seed)?;
        Ok(Distilled::Single(grow_from_samples(
            &samples,
            spec.algorithm,
            spec.alpha,
            spec.max_nodes,
        )?))
    }
}

pub fn parse_mode(name: &str) -> Result<CollectMode> {
    match name.to_ascii_lowercase().as_str() {
        "greedy" => Ok(CollectMode::Greedy),
        "softmax" => Ok(CollectMode::Softmax),
        _ => bail!("unknown collection mode {name:?} (expected greedy or softmax)"),
    }
}

pub fn mode_name(mode: CollectMode) -> &'static str {
    match mode {
        CollectMode::Greedy => "greedy",
        CollectMode::Softmax => "softmax",
    }
}

/// Renders the reproducibility header embedded in every artifact: the
/// subcommand followed by the resolved `key = value` configuration.
pub fn render_header(command: &str, fields: &[(&str, String)]) -> String {
    let mut out = format!("advtree {command}\n");
    for (key, value) in fields {
        let _ = writeln!(out, "{key} = {value}");
    }
    out
}

/// Writes `body` prefixed by `header` as `#` comment lines; every advtree
/// text format skips those on load.
pub fn write_with_comment_header(path: &Path, header: &str, body: &str) -> Result<()> {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(body);
    std::fs::write(path, out)?;
    Ok(())
}

pub fn join_list<T: Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Header fields for a teacher weights file: the full resolved training
/// configuration plus the seed.
pub fn train_config_fields(
    task: advtree_core::Task,
    seed: u64,
    cfg: &advtree_core::TrainConfig,
) -> Vec<(&'static str, String)> {
    vec![
        ("task", task.to_string()),
        ("seed", seed.to_string()),
        ("episodes", cfg.episodes.to_string()),
        ("gamma", cfg.gamma.to_string()),
        ("temperature", cfg.temperature.to_string()),
        ("lr_start", cfg.lr_start.to_string()),
        ("lr_end", cfg.lr_end.to_string()),
        ("epsilon_start", cfg.epsilon_start.to_string()),
        ("epsilon_end", cfg.epsilon_end.to_string()),
        ("bins", join_list(&cfg.bins)),
        ("low", join_list(&cfg.low)),
        ("high", join_list(&cfg.high)),
    ]
}
