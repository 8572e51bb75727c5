//! The cross-product experiment runner behind `advtree grid`.
//!
//! Cells (algorithm × max_nodes × run) execute on a rayon pool; finished
//! rows stream through a single writer that appends to the CSV as they
//! land, so an interrupted run keeps every finished cell and a restart
//! recomputes only the missing ones. On success the file is rewritten in
//! canonical order under a fresh header. Alpha is tuned once per
//! (task, algorithm) across the whole size grid and the choice is recorded
//! in `alpha_report.json`; a rerun reuses the recorded value.

use crate::algo::Algorithm;
use crate::pipeline::{
    distill_from_teacher, grow_from_samples, join_list, render_header, train_config_fields,
    write_with_comment_header, DistillSpec,
};
use advtree_core::eval::{avg_return, consistency_report};
use advtree_core::seeding::derive_seed;
use advtree_core::teacher::{load_teacher, train_tabular_soft_q};
use advtree_core::transfer::{collect, CollectMode};
use advtree_core::{MmdConfig, PolicyTree, Task, Teacher, TrainConfig};
use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use std::collections::{HashMap, HashSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

pub const CSV_COLUMNS: &str =
    "task,algorithm,max_nodes,alpha,run,mean_return,std_return,internal_nodes,leaf_count,mmd";

#[derive(Debug, Clone)]
pub enum TeacherSource {
    Train,
    Weights(PathBuf),
}

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub task: Task,
    pub algorithms: Vec<Algorithm>,
    pub max_nodes: Vec<usize>,
    pub alphas: Vec<f64>,
    pub runs: usize,
    pub eval_episodes: usize,
    pub n_samples: usize,
    pub iterations: usize,
    pub mmd_states: usize,
    pub seed: u64,
    pub teacher: TeacherSource,
    pub out_dir: PathBuf,
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            bail!("no algorithms selected");
        }
        if self.max_nodes.is_empty() {
            bail!("max_nodes list is empty");
        }
        if self.max_nodes.contains(&0) {
            bail!("max_nodes entries must be positive");
        }
        if self.runs == 0 {
            bail!("runs must be at least 1");
        }
        for (name, value) in [
            ("eval_episodes", self.eval_episodes),
            ("n_samples", self.n_samples),
            ("iterations", self.iterations),
            ("mmd_states", self.mmd_states),
        ] {
            if value == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.algorithms.iter().any(|a| a.takes_alpha()) {
            if self.alphas.is_empty() {
                bail!("the alpha grid is empty but a regularized algorithm was selected");
            }
            if self.alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
                bail!("alphas must be nonnegative");
            }
        }
        Ok(())
    }

    fn header(&self) -> String {
        let teacher = match &self.teacher {
            TeacherSource::Train => "train".to_string(),
            TeacherSource::Weights(path) => path.display().to_string(),
        };
        render_header(
            "grid",
            &[
                ("task", self.task.to_string()),
                ("algorithms", join_list(&self.algorithms)),
                ("max_nodes", join_list(&self.max_nodes)),
                ("alphas", join_list(&self.alphas)),
                ("runs", self.runs.to_string()),
                ("eval_episodes", self.eval_episodes.to_string()),
                ("n_samples", self.n_samples.to_string()),
                ("iterations", self.iterations.to_string()),
                ("mmd_states", self.mmd_states.to_string()),
                ("seed", self.seed.to_string()),
                ("teacher", teacher),
            ],
        )
    }

    /// Every cell's randomness stems from this one derivation, so each
    /// (task, algorithm, size, run) is reproducible in isolation. Alpha is
    /// deliberately absent: candidate alphas are compared on the same data.
    fn cell_seed(&self, algorithm: Algorithm, max_nodes: usize, run: usize) -> u64 {
        derive_seed(self.seed, &format!("{}-{}-n{}-run{}", self.task, algorithm, max_nodes, run))
    }

    fn spec(&self, algorithm: Algorithm, alpha: Option<f64>, max_nodes: usize) -> DistillSpec {
        DistillSpec {
            algorithm,
            alpha,
            max_nodes,
            n_samples: self.n_samples,
            iterations: self.iterations,
            eval_episodes: self.eval_episodes,
            mode: CollectMode::Greedy,
        }
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.max_nodes.len() * self.runs);
        for &nodes in &self.max_nodes {
            for run in 0..self.runs {
                out.push((nodes, run));
            }
        }
        out
    }
}

/// One finished grid cell, i.e. one CSV row.
#[derive(Debug, Clone)]
pub struct Row {
    pub task: String,
    pub algorithm: String,
    pub max_nodes: usize,
    pub alpha: Option<f64>,
    pub run: usize,
    pub mean_return: f64,
    pub std_return: f64,
    pub internal_nodes: usize,
    pub leaf_count: usize,
    pub mmd: f64,
}

type CellKey = (String, String, usize, usize);

impl Row {
    pub fn key(&self) -> CellKey {
        (self.task.clone(), self.algorithm.clone(), self.max_nodes, self.run)
    }

    fn to_line(&self) -> String {
        let alpha = self.alpha.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.task,
            self.algorithm,
            self.max_nodes,
            alpha,
            self.run,
            self.mean_return,
            self.std_return,
            self.internal_nodes,
            self.leaf_count,
            self.mmd
        )
    }

    fn parse(line: &str) -> Result<Row> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            bail!("expected 10 fields, got {}", fields.len());
        }
        fn num<T: std::str::FromStr>(raw: &str, what: &str) -> Result<T> {
            raw.parse().map_err(|_| anyhow!("bad {what} {raw:?}"))
        }
        let alpha = if fields[3].is_empty() { None } else { Some(num(fields[3], "alpha")?) };
        Ok(Row {
            task: fields[0].to_string(),
            algorithm: fields[1].to_string(),
            max_nodes: num(fields[2], "max_nodes")?,
            alpha,
            run: num(fields[4], "run")?,
            mean_return: num(fields[5], "mean_return")?,
            std_return: num(fields[6], "std_return")?,
            internal_nodes: num(fields[7], "internal_nodes")?,
            leaf_count: num(fields[8], "leaf_count")?,
            mmd: num(fields[9], "mmd")?,
        })
    }

    /// Canonical row order: task, then the fixed algorithm order (unknown
    /// names last, alphabetically), then size and run.
    fn sort_key(&self) -> (String, usize, String, usize, usize) {
        let rank = Algorithm::parse(&self.algorithm)
            .map(|a| a.rank())
            .unwrap_or(Algorithm::ALL.len());
        (self.task.clone(), rank, self.algorithm.clone(), self.max_nodes, self.run)
    }
}

/// Reads the data rows of an existing grid CSV; a missing or empty file is
/// an empty grid.
pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
    };
    let mut rows = Vec::new();
    let mut saw_columns = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_columns {
            if line != CSV_COLUMNS {
                bail!("{}:{}: expected column header {:?}", path.display(), ln + 1, CSV_COLUMNS);
            }
            saw_columns = true;
            continue;
        }
        rows.push(
            Row::parse(line).with_context(|| format!("{}:{}", path.display(), ln + 1))?,
        );
    }
    Ok(rows)
}

fn resolve_teacher(cfg: &GridConfig) -> Result<Teacher> {
    match &cfg.teacher {
        TeacherSource::Weights(path) => {
            eprintln!("loading teacher from {}", path.display());
            Ok(load_teacher(path, cfg.task)?)
        }
        TeacherSource::Train => {
            let path = cfg.out_dir.join(format!("teacher_{}.txt", cfg.task));
            if path.exists() {
                eprintln!("reusing trained teacher {}", path.display());
                return Ok(load_teacher(&path, cfg.task)?);
            }
            let train_cfg = TrainConfig::default_for(cfg.task);
            let seed = derive_seed(cfg.seed, &format!("teacher-{}", cfg.task));
            eprintln!("training {} teacher for {} episodes", cfg.task, train_cfg.episodes);
            let teacher = train_tabular_soft_q(cfg.task, &train_cfg, seed)?;
            let header =
                render_header("train-teacher", &train_config_fields(cfg.task, seed, &train_cfg));
            write_with_comment_header(&path, &header, &teacher.to_text())?;
            eprintln!("saved teacher to {}", path.display());
            Ok(teacher)
        }
    }
}

/// Distills and scores one cell; the CSV's mean/std come from this one
/// evaluation so every algorithm is scored the same way.
fn tree_and_eval(
    teacher: &Teacher,
    cfg: &GridConfig,
    algorithm: Algorithm,
    alpha: Option<f64>,
    max_nodes: usize,
    run: usize,
) -> Result<(PolicyTree, f64, f64)> {
    let seed = cfg.cell_seed(algorithm, max_nodes, run);
    let tree = distill_from_teacher(teacher, &cfg.spec(algorithm, alpha, max_nodes), seed)?
        .into_tree();
    let summary =
        avg_return(cfg.task, |s| tree.predict(s), cfg.eval_episodes, derive_seed(seed, "eval"))?;
    Ok((tree, summary.mean, summary.std))
}

fn finish_row(
    teacher: &Teacher,
    cfg: &GridConfig,
    algorithm: Algorithm,
    alpha: Option<f64>,
    max_nodes: usize,
    run: usize,
    tree: &PolicyTree,
    mean: f64,
    std: f64,
) -> Result<Row> {
    let seed = cfg.cell_seed(algorithm, max_nodes, run);
    let mmd_cfg = MmdConfig { m: cfg.mmd_states, ..MmdConfig::default() };
    let mmd =
        consistency_report(cfg.task, |s| tree.predict(s), teacher, &mmd_cfg, derive_seed(seed, "mmd"))?;
    Ok(Row {
        task: cfg.task.to_string(),
        algorithm: algorithm.to_string(),
        max_nodes,
        alpha,
        run,
        mean_return: mean,
        std_return: std,
        internal_nodes: tree.internal_count(),
        leaf_count: tree.leaf_count(),
        mmd,
    })
}

struct AlphaChoice {
    alpha: f64,
    /// (alpha, mean return over every cell) in grid order.
    means: Vec<(f64, f64)>,
    /// Chosen-alpha trees and scores keyed by (max_nodes, run), reused by
    /// the final pass so those cells are not distilled twice.
    cells: HashMap<(usize, usize), (PolicyTree, f64, f64)>,
}

/// Scores every alpha candidate over the full size × run grid and picks
/// the best mean return; an exact tie goes to the smaller alpha.
fn tune_alpha(teacher: &Teacher, cfg: &GridConfig, algorithm: Algorithm) -> Result<AlphaChoice> {
    let cells = cfg.cells();
    eprintln!(
        "tuning alpha for {} {}: {} cells x {} candidates",
        cfg.task,
        algorithm,
        cells.len(),
        cfg.alphas.len()
    );
    let per_cell: Vec<Vec<(PolicyTree, f64, f64)>> = cells
        .par_iter()
        .map(|&(max_nodes, run)| -> Result<Vec<(PolicyTree, f64, f64)>> {
            let seed = cfg.cell_seed(algorithm, max_nodes, run);
            if algorithm.iterative() {
                cfg.alphas
                    .iter()
                    .map(|&a| tree_and_eval(teacher, cfg, algorithm, Some(a), max_nodes, run))
                    .collect()
            } else {
                // Alpha is not part of the cell seed, so all candidates
                // share one collection and one evaluation seed: the
                // comparison sees identical data.
                let samples = collect(teacher, cfg.n_samples, CollectMode::Greedy, seed)?;
                cfg.alphas
                    .iter()
                    .map(|&a| {
                        let tree = grow_from_samples(&samples, algorithm, Some(a), max_nodes)?;
                        let summary = avg_return(
                            cfg.task,
                            |s| tree.predict(s),
                            cfg.eval_episodes,
                            derive_seed(seed, "eval"),
                        )?;
                        Ok((tree, summary.mean, summary.std))
                    })
                    .collect()
            }
        })
        .collect::<Result<_>>()?;

    let mut means = Vec::with_capacity(cfg.alphas.len());
    for (ai, &alpha) in cfg.alphas.iter().enumerate() {
        let total: f64 = per_cell.iter().map(|cell| cell[ai].1).sum();
        means.push((alpha, total / cells.len() as f64));
    }
    let mut best = 0;
    for i in 1..means.len() {
        let (alpha, mean) = means[i];
        let (best_alpha, best_mean) = means[best];
        if mean > best_mean || (mean == best_mean && alpha < best_alpha) {
            best = i;
        }
    }
    for (i, &(alpha, mean)) in means.iter().enumerate() {
        let marker = if i == best { "  <- chosen" } else { "" };
        eprintln!("  alpha {alpha}: mean return {mean:.2}{marker}");
    }

    let chosen = cells
        .iter()
        .zip(per_cell)
        .map(|(&cell, mut per_alpha)| (cell, per_alpha.swap_remove(best)))
        .collect();
    Ok(AlphaChoice { alpha: means[best].0, means, cells: chosen })
}

fn report_entry(cfg: &GridConfig, choice: &AlphaChoice) -> Value {
    let means: Vec<Value> = choice
        .means
        .iter()
        .map(|(alpha, mean)| json!({ "alpha": alpha, "mean_return": mean }))
        .collect();
    json!({
        "alpha": choice.alpha,
        "mean_return_by_alpha": means,
        "config": {
            "seed": cfg.seed,
            "n_samples": cfg.n_samples,
            "runs": cfg.runs,
            "max_nodes": join_list(&cfg.max_nodes),
            "eval_episodes": cfg.eval_episodes,
            "iterations": cfg.iterations,
        },
    })
}

fn load_report(path: &Path) -> Result<Map<String, Value>> {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Map::new()),
        Err(e) => return Err(e).with_context(|| format!("reading {}", path.display())),
    };
    match serde_json::from_str::<Value>(&text)
        .with_context(|| format!("parsing {}", path.display()))?
    {
        Value::Object(map) => Ok(map),
        _ => bail!("{}: expected a JSON object", path.display()),
    }
}

fn write_report(path: &Path, report: &Map<String, Value>) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(&Value::Object(report.clone()))?);
    std::fs::write(path, text)?;
    Ok(())
}

/// Appends rows to the CSV as they arrive and flushes after each one, so
/// an interrupted grid keeps everything already computed.
fn spawn_writer(
    path: PathBuf,
    needs_preamble: bool,
    header: String,
) -> (mpsc::Sender<Row>, std::thread::JoinHandle<Result<Vec<Row>>>) {
    let (tx, rx) = mpsc::channel::<Row>();
    let handle = std::thread::spawn(move || -> Result<Vec<Row>> {
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        if needs_preamble {
            let mut preamble = String::new();
            for line in header.lines() {
                preamble.push_str("# ");
                preamble.push_str(line);
                preamble.push('\n');
            }
            preamble.push_str(CSV_COLUMNS);
            preamble.push('\n');
            file.write_all(preamble.as_bytes())?;
            file.flush()?;
        }
        let mut rows = Vec::new();
        for row in rx {
            writeln!(file, "{}", row.to_line())?;
            file.flush()?;
            eprintln!(
                "  {} {} n={} run={}: mean {:.2} mmd {:.4}",
                row.task, row.algorithm, row.max_nodes, row.run, row.mean_return, row.mmd
            );
            rows.push(row);
        }
        Ok(rows)
    });
    (tx, handle)
}

fn rewrite_sorted(path: &Path, header: &str, rows: &[Row]) -> Result<()> {
    let mut out = String::new();
    for line in header.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_line());
        out.push('\n');
    }
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, out)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn run_grid(cfg: &GridConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let teacher = resolve_teacher(cfg)?;

    let csv_path = cfg.out_dir.join("grid.csv");
    let existing = read_rows(&csv_path)?;
    let done: HashSet<CellKey> = existing.iter().map(Row::key).collect();
    let needs_preamble =
        std::fs::metadata(&csv_path).map(|m| m.len() == 0).unwrap_or(true);

    let report_path = cfg.out_dir.join("alpha_report.json");
    let mut report = load_report(&report_path)?;

    let (tx, writer) = spawn_writer(csv_path.clone(), needs_preamble, cfg.header());
    let total = cfg.algorithms.len() * cfg.max_nodes.len() * cfg.runs;
    let mut reused = 0usize;
    let mut run_err: Option<anyhow::Error> = None;

    for &algorithm in &cfg.algorithms {
        let pending: Vec<(usize, usize)> = cfg
            .cells()
            .into_iter()
            .filter(|&(max_nodes, run)| {
                !done.contains(&(
                    cfg.task.to_string(),
                    algorithm.to_string(),
                    max_nodes,
                    run,
                ))
            })
            .collect();
        reused += cfg.max_nodes.len() * cfg.runs - pending.len();

        let mut cache: HashMap<(usize, usize), (PolicyTree, f64, f64)> = HashMap::new();
        let alpha = if algorithm.takes_alpha() {
            let entry_key = format!("{}/{}", cfg.task, algorithm);
            let recorded =
                report.get(&entry_key).and_then(|e| e.get("alpha")).and_then(Value::as_f64);
            match recorded {
                Some(alpha) => {
                    eprintln!("{entry_key}: using recorded alpha {alpha}");
                    Some(alpha)
                }
                None if pending.is_empty() => {
                    // Every cell is already in the CSV; nothing left that
                    // needs the tuning result.
                    eprintln!("{entry_key}: all cells recorded, skipping alpha tuning");
                    None
                }
                None => match tune_alpha(&teacher, cfg, algorithm) {
                    Ok(choice) => {
                        report.insert(entry_key, report_entry(cfg, &choice));
                        write_report(&report_path, &report)?;
                        cache = choice.cells;
                        Some(choice.alpha)
                    }
                    Err(e) => {
                        run_err = Some(e);
                        break;
                    }
                },
            }
        } else {
            None
        };

        if pending.is_empty() {
            eprintln!("{} {}: all {} cells already recorded", cfg.task, algorithm, cfg.max_nodes.len() * cfg.runs);
            continue;
        }
        eprintln!("{} {}: running {} cells", cfg.task, algorithm, pending.len());

        let result = pending.par_iter().try_for_each_with(
            tx.clone(),
            |tx, &(max_nodes, run)| -> Result<()> {
                let (tree, mean, std) = match cache.get(&(max_nodes, run)) {
                    Some((tree, mean, std)) => (tree.clone(), *mean, *std),
                    None => tree_and_eval(&teacher, cfg, algorithm, alpha, max_nodes, run)?,
                };
                let row =
                    finish_row(&teacher, cfg, algorithm, alpha, max_nodes, run, &tree, mean, std)?;
                tx.send(row).ok();
                Ok(())
            },
        );
        if let Err(e) = result {
            run_err = Some(e);
            break;
        }
    }

    drop(tx);
    let new_rows = writer.join().map_err(|_| anyhow!("writer thread panicked"))??;
    if let Some(e) = run_err {
        return Err(e);
    }

    let mut rows = existing;
    rows.extend(new_rows);
    rows.sort_by_key(Row::sort_key);
    rewrite_sorted(&csv_path, &cfg.header(), &rows)?;
    println!(
        "grid complete: {} cells this run ({} reused from earlier runs), {} rows in {}",
        total,
        reused,
        rows.len(),
        csv_path.display()
    );
    Ok(())
}
