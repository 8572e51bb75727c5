//! `advtree`: distill RL teacher policies into decision-tree policies.
//!
//! Subcommands cover the whole pipeline: train a teacher, collect a
//! transfer set, distill a tree, evaluate it, export importance and rules,
//! and run the full comparison grid. Configuration comes from built-in
//! defaults, then an optional `key = value` file, then command-line flags;
//! environment variables are never read.

mod algo;
mod config;
mod grid;
mod pipeline;

use crate::algo::Algorithm;
use crate::config::{parse_list, pick, KeyValues};
use crate::grid::{run_grid, GridConfig, TeacherSource};
use crate::pipeline::{
    check_alpha, distill_from_teacher, grow_from_samples, mode_name, parse_mode, render_header,
    train_config_fields, write_with_comment_header, DistillSpec, Distilled,
};
use advtree_core::eval::{avg_return, consistency_report};
use advtree_core::seeding::derive_seed;
use advtree_core::teacher::{load_teacher, train_tabular_soft_q};
use advtree_core::transfer::{collect, load_transfer_set, save_transfer_set};
use advtree_core::{MmdConfig, PolicyTree, Task, TrainConfig};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "advtree", version, about = "Distills RL teacher policies into decision trees")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a tabular soft-Q teacher and write its weights file.
    TrainTeacher(TrainTeacherArgs),
    /// Roll out a teacher and write the annotated transfer set.
    Collect(CollectArgs),
    /// Grow one tree from a transfer set or a teacher.
    Distill(DistillArgs),
    /// Score a tree file by average return (and MMD against a teacher).
    Evaluate(EvaluateArgs),
    /// Export a tree's feature importance and decision rules.
    Importance(ImportanceArgs),
    /// Run the algorithm x size x run comparison grid.
    Grid(GridArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::TrainTeacher(args) => cmd_train_teacher(args),
        Cmd::Collect(args) => cmd_collect(args),
        Cmd::Distill(args) => cmd_distill(args),
        Cmd::Evaluate(args) => cmd_evaluate(args),
        Cmd::Importance(args) => cmd_importance(args),
        Cmd::Grid(args) => cmd_grid(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<KeyValues> {
    match path {
        Some(path) => KeyValues::load(path),
        None => Ok(KeyValues::empty()),
    }
}

#[derive(Args)]
struct TrainTeacherArgs {
    /// Task name: cartpole, mountain_car, or acrobot.
    #[arg(long)]
    task: Option<String>,
    /// Teacher weights file to write.
    #[arg(long)]
    out: PathBuf,
    /// key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    lr_start: Option<f64>,
    #[arg(long)]
    lr_end: Option<f64>,
    #[arg(long)]
    epsilon_start: Option<f64>,
    #[arg(long)]
    epsilon_end: Option<f64>,
    /// Comma-separated per-dimension bin counts.
    #[arg(long)]
    bins: Option<String>,
    /// Comma-separated discretization lower bounds.
    #[arg(long)]
    low: Option<String>,
    /// Comma-separated discretization upper bounds.
    #[arg(long)]
    high: Option<String>,
    /// Greedy evaluation episodes after training; 0 skips the check.
    #[arg(long)]
    eval_episodes: Option<usize>,
}

fn cmd_train_teacher(args: TrainTeacherArgs) -> Result<()> {
    let mut file = load_config(&args.config)?;
    let task_name = args
        .task
        .or_else(|| file.take("task"))
        .context("task is required (--task or task = ... in the config)")?;
    let task = Task::parse(&task_name)?;
    let seed = pick(args.seed, file.take_parsed("seed")?, 0);

    let mut cfg = TrainConfig::default_for(task);
    cfg.episodes = pick(args.episodes, file.take_parsed("episodes")?, cfg.episodes);
    cfg.gamma = pick(args.gamma, file.take_parsed("gamma")?, cfg.gamma);
    cfg.temperature = pick(args.temperature, file.take_parsed("temperature")?, cfg.temperature);
    cfg.lr_start = pick(args.lr_start, file.take_parsed("lr_start")?, cfg.lr_start);
    cfg.lr_end = pick(args.lr_end, file.take_parsed("lr_end")?, cfg.lr_end);
    cfg.epsilon_start =
        pick(args.epsilon_start, file.take_parsed("epsilon_start")?, cfg.epsilon_start);
    cfg.epsilon_end = pick(args.epsilon_end, file.take_parsed("epsilon_end")?, cfg.epsilon_end);
    if let Some(raw) = args.bins.or_else(|| file.take("bins")) {
        cfg.bins = parse_list("bins", &raw)?;
    }
    if let Some(raw) = args.low.or_else(|| file.take("low")) {
        cfg.low = parse_list("low", &raw)?;
    }
    if let Some(raw) = args.high.or_else(|| file.take("high")) {
        cfg.high = parse_list("high", &raw)?;
    }
    let eval_episodes = pick(args.eval_episodes, file.take_parsed("eval_episodes")?, 100);
    file.finish()?;

    eprintln!("training {task} teacher for {} episodes (seed {seed})", cfg.episodes);
    let teacher = train_tabular_soft_q(task, &cfg, seed)?;
    let header = render_header("train-teacher", &train_config_fields(task, seed, &cfg));
    write_with_comment_header(&args.out, &header, &teacher.to_text())?;
    println!("saved {}", args.out.display());
    if eval_episodes > 0 {
        let summary = avg_return(
            task,
            |s| teacher.act_greedy(s),
            eval_episodes,
            derive_seed(seed, "teacher-eval"),
        )?;
        println!(
            "greedy mean_return {} (std {:.2}) over {} episodes",
            summary.mean, summary.std, eval_episodes
        );
    }
    Ok(())
}

#[derive(Args)]
struct CollectArgs {
    /// Teacher weights file.
    #[arg(long)]
    teacher: PathBuf,
    #[arg(long)]
    task: String,
    /// Minimum number of states to record (whole episodes, so the set can
    /// overshoot).
    #[arg(long, default_value_t = 20000)]
    samples: usize,
    /// greedy, or softmax for the ablation that samples teacher actions.
    #[arg(long, default_value = "greedy")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Transfer-set file to write.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_collect(args: CollectArgs) -> Result<()> {
    let task = Task::parse(&args.task)?;
    let mode = parse_mode(&args.mode)?;
    let teacher = load_teacher(&args.teacher, task)?;
    let samples = collect(&teacher, args.samples, mode, args.seed)?;
    let header = render_header(
        "collect",
        &[
            ("task", task.to_string()),
            ("teacher", args.teacher.display().to_string()),
            ("samples", args.samples.to_string()),
            ("mode", mode_name(mode).to_string()),
            ("seed", args.seed.to_string()),
        ],
    );
    save_transfer_set(&samples, &args.out, &header)?;
    println!("saved {} samples to {}", samples.len(), args.out.display());
    Ok(())
}

#[derive(Args)]
struct DistillArgs {
    /// key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// BC, FQ, ViperM, Dpic, DpicM, DpicR, or DpicRM.
    #[arg(long)]
    algorithm: Option<String>,
    /// Internal-node budget.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Error-penalty weight; required by DpicR and DpicRM only.
    #[arg(long)]
    alpha: Option<f64>,
    /// Grow from this transfer-set file (single-pass algorithms only).
    #[arg(long)]
    transfer: Option<PathBuf>,
    /// Collect from this teacher instead of a fixed transfer file; the
    /// iterated ..M algorithms require it.
    #[arg(long)]
    teacher: Option<PathBuf>,
    /// Task name; required with --teacher.
    #[arg(long)]
    task: Option<String>,
    /// Samples collected per pass when distilling from a teacher.
    #[arg(long)]
    samples: Option<usize>,
    /// Collect/resample/grow rounds for the ..M algorithms.
    #[arg(long)]
    iterations: Option<usize>,
    /// Episodes scoring each round for best-so-far selection.
    #[arg(long)]
    eval_episodes: Option<usize>,
    /// Teacher action selection while collecting: greedy or softmax.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tree file to write.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_distill(args: DistillArgs) -> Result<()> {
    let mut file = load_config(&args.config)?;
    let algorithm = Algorithm::parse(
        &args
            .algorithm
            .or_else(|| file.take("algorithm"))
            .context("algorithm is required")?,
    )?;
    let max_nodes: usize = args
        .max_nodes
        .or(file.take_parsed("max_nodes")?)
        .context("max_nodes is required")?;
    if max_nodes == 0 {
        bail!("max_nodes must be positive");
    }
    let alpha = args.alpha.or(file.take_parsed("alpha")?);
    check_alpha(algorithm, alpha)?;
    let seed = pick(args.seed, file.take_parsed("seed")?, 0);
    let transfer = args.transfer.or_else(|| file.take("transfer").map(PathBuf::from));
    let teacher_path = args.teacher.or_else(|| file.take("teacher").map(PathBuf::from));
    let n_samples = pick(args.samples, file.take_parsed("samples")?, 20000);
    let iterations = pick(args.iterations, file.take_parsed("iterations")?, 5);
    let eval_episodes = pick(args.eval_episodes, file.take_parsed("eval_episodes")?, 100);
    let mode = parse_mode(&pick(args.mode, file.take("mode"), "greedy".to_string()))?;
    let task_name = args.task.or_else(|| file.take("task"));
    file.finish()?;

    let mut fields = vec![
        ("algorithm", algorithm.to_string()),
        ("max_nodes", max_nodes.to_string()),
        ("seed", seed.to_string()),
    ];
    if let Some(a) = alpha {
        fields.push(("alpha", a.to_string()));
    }

    let tree = match (&transfer, &teacher_path) {
        (Some(_), Some(_)) => bail!("pass either --transfer or --teacher, not both"),
        (None, None) => bail!("a data source is required: --transfer <file> or --teacher <file>"),
        (Some(path), None) => {
            if algorithm.iterative() {
                bail!("{algorithm} re-collects every iteration; pass --teacher instead of --transfer");
            }
            let samples = load_transfer_set(path)?;
            eprintln!("loaded {} samples from {}", samples.len(), path.display());
            fields.push(("transfer", path.display().to_string()));
            grow_from_samples(&samples, algorithm, alpha, max_nodes)?
        }
        (None, Some(path)) => {
            let task_name = task_name.context("task is required when distilling from a teacher")?;
            let task = Task::parse(&task_name)?;
            let teacher = load_teacher(path, task)?;
            fields.push(("task", task.to_string()));
            fields.push(("teacher", path.display().to_string()));
            fields.push(("samples", n_samples.to_string()));
            fields.push(("mode", mode_name(mode).to_string()));
            if algorithm.iterative() {
                fields.push(("iterations", iterations.to_string()));
                fields.push(("eval_episodes", eval_episodes.to_string()));
            }
            let spec = DistillSpec {
                algorithm,
                alpha,
                max_nodes,
                n_samples,
                iterations,
                eval_episodes,
                mode,
            };
            match distill_from_teacher(&teacher, &spec, seed)? {
                Distilled::Single(tree) => tree,
                Distilled::Looped(result) => {
                    for r in &result.records {
                        eprintln!(
                            "iteration {}: pool {} mean_return {:.2} (best so far {:.2})",
                            r.iteration, r.dataset_size, r.mean_return, r.best_so_far
                        );
                    }
                    fields.push(("best_iteration", result.best_iteration.to_string()));
                    result.tree
                }
            }
        }
    };

    let header = render_header("distill", &fields);
    std::fs::write(&args.out, tree.to_text(&header))?;
    println!(
        "saved {} ({} internal nodes, {} leaves)",
        args.out.display(),
        tree.internal_count(),
        tree.leaf_count()
    );
    Ok(())
}

#[derive(Args)]
struct EvaluateArgs {
    /// Tree file to score.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    task: String,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also report the MMD state-distribution discrepancy against this
    /// teacher.
    #[arg(long)]
    teacher: Option<PathBuf>,
    /// Cap on states per side of the MMD estimate.
    #[arg(long, default_value_t = 2000)]
    mmd_states: usize,
    /// Also write the report as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let task = Task::parse(&args.task)?;
    let tree = PolicyTree::load(&args.tree)?;
    let spec = task.spec();
    if tree.n_features != spec.obs_dim || tree.n_actions != spec.n_actions {
        bail!(
            "tree shape ({} features, {} actions) does not match {task} ({}, {})",
            tree.n_features,
            tree.n_actions,
            spec.obs_dim,
            spec.n_actions
        );
    }
    let summary =
        avg_return(task, |s| tree.predict(s), args.episodes, derive_seed(args.seed, "eval"))?;
    let mmd = match &args.teacher {
        Some(path) => {
            let teacher = load_teacher(path, task)?;
            let cfg = MmdConfig { m: args.mmd_states, ..MmdConfig::default() };
            Some(consistency_report(
                task,
                |s| tree.predict(s),
                &teacher,
                &cfg,
                derive_seed(args.seed, "mmd"),
            )?)
        }
        None => None,
    };

    println!("task            {task}");
    println!("tree            {}", args.tree.display());
    println!("episodes        {}", args.episodes);
    println!("seed            {}", args.seed);
    println!("mean_return     {}", summary.mean);
    println!("std_return      {}", summary.std);
    println!("internal_nodes  {}", tree.internal_count());
    println!("leaf_count      {}", tree.leaf_count());
    if let Some(mmd) = mmd {
        println!("mmd             {mmd}");
    }

    if let Some(out) = &args.out {
        let report = json!({
            "command": "evaluate",
            "task": task.to_string(),
            "tree": args.tree.display().to_string(),
            "teacher": args.teacher.as_ref().map(|p| p.display().to_string()),
            "episodes": args.episodes,
            "seed": args.seed,
            "mmd_states": args.mmd_states,
            "mean_return": summary.mean,
            "std_return": summary.std,
            "internal_nodes": tree.internal_count(),
            "leaf_count": tree.leaf_count(),
            "mmd": mmd,
        });
        std::fs::write(out, format!("{}\n", serde_json::to_string_pretty(&report)?))?;
        println!("saved {}", out.display());
    }
    Ok(())
}

#[derive(Args)]
struct ImportanceArgs {
    /// Tree file to explain.
    #[arg(long)]
    tree: PathBuf,
    /// Task name for feature labels; omit for generic f0..fN labels.
    #[arg(long)]
    task: Option<String>,
    /// Write the importance vector as JSON here instead of stdout.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Write the if-then rule text here instead of stdout.
    #[arg(long)]
    out_rules: Option<PathBuf>,
}

fn cmd_importance(args: ImportanceArgs) -> Result<()> {
    let tree = PolicyTree::load(&args.tree)?;
    let names: Vec<String> = match &args.task {
        Some(name) => {
            let task = Task::parse(name)?;
            let names: Vec<String> =
                task.feature_names().iter().map(|s| s.to_string()).collect();
            if names.len() != tree.n_features {
                bail!(
                    "{task} has {} features but the tree was grown over {}",
                    names.len(),
                    tree.n_features
                );
            }
            names
        }
        None => (0..tree.n_features).map(|i| format!("f{i}")).collect(),
    };
    let importance = tree.feature_importance();
    let rules = tree.export_rules(&names)?;

    let report = json!({
        "command": "importance",
        "tree": args.tree.display().to_string(),
        "features": names,
        "importance": importance,
    });
    let json_text = format!("{}\n", serde_json::to_string_pretty(&report)?);
    match &args.out_json {
        Some(path) => {
            std::fs::write(path, &json_text)?;
            println!("saved {}", path.display());
        }
        None => print!("{json_text}"),
    }
    match &args.out_rules {
        Some(path) => {
            let header =
                render_header("importance", &[("tree", args.tree.display().to_string())]);
            write_with_comment_header(path, &header, &rules)?;
            println!("saved {}", path.display());
        }
        None => print!("{rules}"),
    }
    Ok(())
}

#[derive(Args)]
struct GridArgs {
    /// key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<String>,
    /// Comma-separated algorithm subset; defaults to all seven.
    #[arg(long)]
    algorithms: Option<String>,
    /// Comma-separated internal-node budgets.
    #[arg(long)]
    max_nodes: Option<String>,
    /// Comma-separated alpha candidates for DpicR and DpicRM.
    #[arg(long)]
    alphas: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    eval_episodes: Option<usize>,
    /// Transfer samples per collection pass.
    #[arg(long)]
    n_samples: Option<usize>,
    /// Rounds of the collect/resample/grow loop for ..M algorithms.
    #[arg(long)]
    iterations: Option<usize>,
    /// Cap on states per side of each cell's MMD estimate.
    #[arg(long)]
    mmd_states: Option<usize>,
    /// Master seed; every cell derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// "train", or a teacher weights file to load.
    #[arg(long)]
    teacher: Option<String>,
    /// Directory for grid.csv, alpha_report.json, and trained teachers.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let mut file = load_config(&args.config)?;
    let task = Task::parse(
        &args.task.or_else(|| file.take("task")).context("task is required")?,
    )?;
    let algorithms = match args.algorithms.or_else(|| file.take("algorithms")) {
        Some(raw) => {
            let mut algorithms = Vec::new();
            for name in parse_list::<String>("algorithms", &raw)? {
                let algorithm = Algorithm::parse(&name)?;
                if !algorithms.contains(&algorithm) {
                    algorithms.push(algorithm);
                }
            }
            algorithms
        }
        None => Algorithm::ALL.to_vec(),
    };
    let max_nodes = match args.max_nodes.or_else(|| file.take("max_nodes")) {
        Some(raw) => parse_list("max_nodes", &raw)?,
        None => vec![1, 3, 7, 15, 31, 63],
    };
    let alphas = match args.alphas.or_else(|| file.take("alphas")) {
        Some(raw) => parse_list("alphas", &raw)?,
        None => vec![0.02, 0.04, 0.08, 0.1, 0.15],
    };
    let teacher = match args.teacher.or_else(|| file.take("teacher")) {
        None => TeacherSource::Train,
        Some(s) if s == "train" => TeacherSource::Train,
        Some(path) => TeacherSource::Weights(PathBuf::from(path)),
    };
    let cfg = GridConfig {
        task,
        algorithms,
        max_nodes,
        alphas,
        runs: pick(args.runs, file.take_parsed("runs")?, 10),
        eval_episodes: pick(args.eval_episodes, file.take_parsed("eval_episodes")?, 100),
        n_samples: pick(args.n_samples, file.take_parsed("n_samples")?, 20000),
        iterations: pick(args.iterations, file.take_parsed("iterations")?, 5),
        mmd_states: pick(args.mmd_states, file.take_parsed("mmd_states")?, 2000),
        seed: pick(args.seed, file.take_parsed("seed")?, 0),
        teacher,
        out_dir: pick(
            args.out_dir,
            file.take("out_dir").map(PathBuf::from),
            PathBuf::from("results"),
        ),
    };
    file.finish()?;
    run_grid(&cfg)
}
