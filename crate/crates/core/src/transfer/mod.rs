//! Transfer sets: teacher rollouts annotated with Q-vectors and
//! advantages, per-action cost construction for each distillation
//! objective, value-gap prioritized resampling, and the iterated
//! collect/grow/evaluate loop behind the "_M" variants.

mod offline;

pub use offline::{offline_loop, IterationRecord, OfflineConfig, OfflineResult};

use crate::env::{Env, Task};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::teacher::{advantage, argmax, soft_value, softmax_policy, Teacher};
use crate::tree::TreeDataset;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

/// One teacher-visited state with everything distillation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferSample {
    pub state: Vec<f64>,
    /// The teacher's greedy action, always `argmax(q)`.
    pub teacher_action: usize,
    pub q: Vec<f64>,
    pub advantage: Vec<f64>,
}

impl TransferSample {
    pub fn from_q(state: Vec<f64>, q: Vec<f64>) -> Result<TransferSample> {
        if q.is_empty() || q.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract(format!("bad Q-vector {q:?}")));
        }
        let adv = advantage(&q)?;
        Ok(TransferSample { state, teacher_action: argmax(&q), q, advantage: adv })
    }
}

/// Distillation objective determining how value rows are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// 0/1 disagreement with the teacher action.
    Bc,
    /// Negated advantage.
    Dpic,
    /// Negated advantage plus an error penalty weighted by alpha.
    DpicR,
    /// Q-vectors as regression targets.
    Fq,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Bc => "bc",
            Objective::Dpic => "dpic",
            Objective::DpicR => "dpic_r",
            Objective::Fq => "fq",
        })
    }
}

/// Per-sample, per-action value rows: nonnegative costs for the
/// classification objectives, raw Q targets for `Fq`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub costs: Vec<Vec<f64>>,
    pub objective: Objective,
    pub alpha: Option<f64>,
}

/// Builds the per-action rows for `objective`. `alpha` must be supplied
/// exactly for `DpicR` (and be nonnegative). Advantage negation can leave
/// dust in (-1e-12, 0); such entries clamp to zero so the rows stay valid
/// costs.
pub fn build_costs(
    samples: &[TransferSample],
    objective: Objective,
    alpha: Option<f64>,
) -> Result<CostMatrix> {
    match (objective, alpha) {
        (Objective::DpicR, Some(a)) if a < 0.0 => {
            return Err(Error::contract(format!("alpha must be nonnegative, got {a}")))
        }
        (Objective::DpicR, None) => {
            return Err(Error::contract("DpicR requires alpha"))
        }
        (Objective::DpicR, Some(_)) => {}
        (_, Some(_)) => {
            return Err(Error::contract(format!("{objective} does not take alpha")))
        }
        (_, None) => {}
    }
    let costs = samples
        .iter()
        .map(|s| {
            let k = s.q.len();
            match objective {
                Objective::Bc => (0..k)
                    .map(|a| if a == s.teacher_action { 0.0 } else { 1.0 })
                    .collect(),
                Objective::Dpic => s.advantage.iter().map(|a| clamp_cost(-a)).collect(),
                Objective::DpicR => {
                    let alpha = alpha.unwrap();
                    (0..k)
                        .map(|a| {
                            let base = clamp_cost(-s.advantage[a]);
                            if a == s.teacher_action {
                                base
                            } else {
                                base + alpha
                            }
                        })
                        .collect()
                }
                Objective::Fq => s.q.clone(),
            }
        })
        .collect();
    Ok(CostMatrix { costs, objective, alpha })
}

fn clamp_cost(c: f64) -> f64 {
    if c < 0.0 {
        debug_assert!(c > -1e-12, "advantage negation produced {c}");
        0.0
    } else {
        c
    }
}

/// Assembles the grow-ready dataset: states as features, cost/target rows
/// as values, teacher actions as labels.
pub fn to_dataset(samples: &[TransferSample], costs: &CostMatrix) -> Result<TreeDataset> {
    if samples.len() != costs.costs.len() {
        return Err(Error::contract(format!(
            "{} samples but {} cost rows",
            samples.len(),
            costs.costs.len()
        )));
    }
    TreeDataset::new(
        samples.iter().map(|s| s.state.clone()).collect(),
        costs.costs.clone(),
        samples.iter().map(|s| s.teacher_action).collect(),
    )
}

/// How the teacher picks actions during collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectMode {
    Greedy,
    /// Samples from the Boltzmann policy; kept for ablations.
    Softmax,
}

/// One recorded environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutStep {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub done: bool,
}

/// Whole episodes of experience; `episode_starts[i]` indexes the first
/// step of episode `i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rollout {
    pub steps: Vec<RolloutStep>,
    pub episode_starts: Vec<usize>,
}

/// Runs whole episodes of `policy` on `task` until at least `min_steps`
/// steps are recorded. Episode `i` resets with `derive_seed(seed,
/// "episode-<i>")`, so traces are reproducible.
pub fn rollout<F>(task: Task, mut policy: F, min_steps: usize, seed: u64) -> Result<Rollout>
where
    F: FnMut(&[f64]) -> usize,
{
    let mut env = Env::new(task);
    let mut out = Rollout::default();
    let mut episode = 0usize;
    while out.steps.len() < min_steps {
        out.episode_starts.push(out.steps.len());
        let mut state = env.reset(derive_seed(seed, &format!("episode-{episode}")));
        loop {
            let action = policy(&state);
            let tr = env.step(action)?;
            out.steps.push(RolloutStep {
                state,
                action,
                reward: tr.reward,
                done: tr.done,
            });
            if tr.done || tr.truncated {
                break;
            }
            state = tr.next_state;
        }
        episode += 1;
    }
    Ok(out)
}

/// Collects at least `n_samples` teacher-visited states (whole episodes,
/// so the result can overshoot) and annotates each with the teacher's
/// Q-vector and advantage. Deterministic for a fixed (seed, mode).
pub fn collect(
    teacher: &Teacher,
    n_samples: usize,
    mode: CollectMode,
    seed: u64,
) -> Result<Vec<TransferSample>> {
    if n_samples == 0 {
        return Err(Error::contract("sample budget must be positive"));
    }
    let task = teacher.task();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "collect-actions"));
    let mut err: Option<Error> = None;
    let roll = rollout(
        task,
        |state| {
            let q = teacher.q_values(state);
            match mode {
                CollectMode::Greedy => argmax(&q),
                CollectMode::Softmax => match softmax_policy(&q) {
                    Ok(probs) => {
                        let u: f64 = rng.gen();
                        let mut acc = 0.0;
                        let mut pick = probs.len() - 1;
                        for (i, p) in probs.iter().enumerate() {
                            acc += p;
                            if u < acc {
                                pick = i;
                                break;
                            }
                        }
                        pick
                    }
                    Err(e) => {
                        err = Some(e);
                        0
                    }
                },
            }
        },
        n_samples,
        seed,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    roll.steps
        .into_iter()
        .map(|step| {
            let q = teacher.q_values(&step.state);
            TransferSample::from_q(step.state, q)
        })
        .collect()
}

/// Viper-style prioritized resampling: draws `samples.len()` samples with
/// replacement, weighting each by its value gap `soft_value(q) - min q`
/// (how much worse the worst action is than the state's value). If every
/// weight is zero the draw falls back to uniform.
pub fn viper_resample<R: Rng>(
    samples: &[TransferSample],
    rng: &mut R,
) -> Result<Vec<TransferSample>> {
    if samples.is_empty() {
        return Err(Error::contract("cannot resample an empty transfer set"));
    }
    let weights: Vec<f64> = samples
        .iter()
        .map(|s| {
            let min_q = s.q.iter().cloned().fold(f64::INFINITY, f64::min);
            soft_value(&s.q).map(|v| v - min_q)
        })
        .collect::<Result<_>>()?;
    let picks: Vec<usize> = match WeightedIndex::new(&weights) {
        Ok(dist) => (0..samples.len()).map(|_| dist.sample(rng)).collect(),
        // All-zero weights (identical Q entries everywhere): uniform.
        Err(_) => (0..samples.len())
            .map(|_| rng.gen_range(0..samples.len()))
            .collect(),
    };
    Ok(picks.into_iter().map(|i| samples[i].clone()).collect())
}

/// Writes a transfer set: comment header, then `obs_dim,k`, then one
/// comma-separated record per sample (state, action, Q-vector).
pub fn save_transfer_set(
    samples: &[TransferSample],
    path: &Path,
    header: &str,
) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::contract("cannot save an empty transfer set"));
    }
    let obs_dim = samples[0].state.len();
    let k = samples[0].q.len();
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{obs_dim},{k}");
    for s in samples {
        let mut fields: Vec<String> = s.state.iter().map(f64::to_string).collect();
        fields.push(s.teacher_action.to_string());
        fields.extend(s.q.iter().map(f64::to_string));
        let _ = writeln!(out, "{}", fields.join(","));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_transfer_set(path: &Path) -> Result<Vec<TransferSample>> {
    let text = std::fs::read_to_string(path)?;
    let p = path.display().to_string();
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&p, "missing obs_dim,k header"))?;
    let (obs_dim, k) = header
        .split_once(',')
        .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
        .ok_or_else(|| Error::parse(&p, format!("bad header {header:?}")))?;

    let mut samples = Vec::new();
    for (ln, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != obs_dim + 1 + k {
            return Err(Error::parse(
                &p,
                format!(
                    "record {ln}: {} fields, expected {}",
                    fields.len(),
                    obs_dim + 1 + k
                ),
            ));
        }
        let parse = |t: &str| -> Result<f64> {
            t.trim()
                .parse()
                .map_err(|_| Error::parse(&p, format!("record {ln}: bad number {t:?}")))
        };
        let state = fields[..obs_dim].iter().map(|t| parse(t)).collect::<Result<Vec<f64>>>()?;
        let action: usize = fields[obs_dim]
            .trim()
            .parse()
            .map_err(|_| Error::parse(&p, format!("record {ln}: bad action")))?;
        let q = fields[obs_dim + 1..]
            .iter()
            .map(|t| parse(t))
            .collect::<Result<Vec<f64>>>()?;
        let sample = TransferSample::from_q(state, q)
            .map_err(|e| Error::parse(&p, format!("record {ln}: {e}")))?;
        if sample.teacher_action != action {
            return Err(Error::parse(
                &p,
                format!(
                    "record {ln}: stored action {action} is not the Q argmax {}",
                    sample.teacher_action
                ),
            ));
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::parse(&p, "transfer set has no records"));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teacher::{train_tabular_soft_q, TrainConfig};

    fn sample(q: Vec<f64>) -> TransferSample {
        TransferSample::from_q(vec![0.0, 0.0], q).unwrap()
    }

    #[test]
    fn bc_rows_are_one_hot_complements() {
        let m = build_costs(&[sample(vec![2.0, -1.0])], Objective::Bc, None).unwrap();
        assert_eq!(m.costs, vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn dpic_rows_negate_the_advantage() {
        let s = sample(vec![1.0, 0.0]);
        let m = build_costs(&[s.clone()], Objective::Dpic, None).unwrap();
        assert!((m.costs[0][0] - 0.31326).abs() < 1e-5);
        assert!((m.costs[0][1] - 1.31326).abs() < 1e-5);
        // The cheapest action is the teacher's.
        assert_eq!(s.teacher_action, 0);
    }

    #[test]
    fn dpic_r_adds_alpha_off_the_teacher_action() {
        let s = sample(vec![1.0, 0.0]);
        let m = build_costs(&[s], Objective::DpicR, Some(0.1)).unwrap();
        assert!((m.costs[0][0] - 0.31326).abs() < 1e-5);
        assert!((m.costs[0][1] - 1.41326).abs() < 1e-5);
    }

    #[test]
    fn fq_rows_are_raw_q_targets() {
        let m = build_costs(&[sample(vec![-3.0, 7.0])], Objective::Fq, None).unwrap();
        assert_eq!(m.costs, vec![vec![-3.0, 7.0]]);
    }

    #[test]
    fn alpha_validation() {
        let s = [sample(vec![0.0, 1.0])];
        assert!(build_costs(&s, Objective::DpicR, None).is_err());
        assert!(build_costs(&s, Objective::DpicR, Some(-0.5)).is_err());
        assert!(build_costs(&s, Objective::Dpic, Some(0.1)).is_err());
    }

    #[test]
    fn dpic_min_cost_bounded_by_ln_k() {
        for q in [vec![0.0, 0.0, 0.0], vec![5.0, -1.0, 2.0], vec![-9.9, 9.9, 0.1]] {
            let k = q.len() as f64;
            let s = sample(q);
            let m = build_costs(&[s.clone()], Objective::Dpic, None).unwrap();
            let min = m.costs[0].iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= 0.0);
            assert!(min <= k.ln() + 1e-12);
            let argmin = m.costs[0]
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmin, s.teacher_action);
        }
    }

    #[test]
    fn build_costs_is_row_independent() {
        let a = sample(vec![1.0, 0.0]);
        let b = sample(vec![-2.0, 3.0]);
        let fwd = build_costs(&[a.clone(), b.clone()], Objective::Dpic, None).unwrap();
        let rev = build_costs(&[b, a], Objective::Dpic, None).unwrap();
        assert_eq!(fwd.costs[0], rev.costs[1]);
        assert_eq!(fwd.costs[1], rev.costs[0]);
    }

    fn tiny_teacher() -> Teacher {
        let mut cfg = TrainConfig::default_for(Task::CartPole);
        cfg.episodes = 40;
        train_tabular_soft_q(Task::CartPole, &cfg, 3).unwrap()
    }

    #[test]
    fn collect_is_deterministic_and_annotated() {
        let teacher = tiny_teacher();
        let a = collect(&teacher, 50, CollectMode::Greedy, 7).unwrap();
        let b = collect(&teacher, 50, CollectMode::Greedy, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.len() >= 50);
        for s in &a {
            assert_eq!(s.teacher_action, argmax(&s.q));
            let adv = advantage(&s.q).unwrap();
            assert_eq!(s.advantage, adv);
        }
    }

    #[test]
    fn collect_runs_whole_episodes() {
        let teacher = tiny_teacher();
        let samples = collect(&teacher, 1, CollectMode::Greedy, 1).unwrap();
        // One whole episode, not literally one sample.
        let roll = rollout(
            Task::CartPole,
            |s| teacher.act_greedy(s),
            1,
            1,
        )
        .unwrap();
        assert_eq!(samples.len(), roll.steps.len());
    }

    #[test]
    fn softmax_mode_differs_but_is_reproducible() {
        let teacher = tiny_teacher();
        let a = collect(&teacher, 60, CollectMode::Softmax, 11).unwrap();
        let b = collect(&teacher, 60, CollectMode::Softmax, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn resample_weights_follow_value_gap() {
        // Two samples: one with a large Q spread, one with none. The
        // spread sample must dominate the resampled population.
        let wide = sample(vec![5.0, -5.0]);
        let flat = sample(vec![1.0, 1.0]);
        let pool: Vec<TransferSample> = std::iter::repeat(wide.clone())
            .take(1)
            .chain(std::iter::repeat(flat.clone()).take(1))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut wide_picks = 0usize;
        let n = 20_000;
        for _ in 0..n / pool.len() {
            for s in viper_resample(&pool, &mut rng).unwrap() {
                if s == wide {
                    wide_picks += 1;
                }
            }
        }
        let w_wide = soft_value(&wide.q).unwrap() + 5.0;
        let w_flat = soft_value(&flat.q).unwrap() - 1.0;
        let expected = w_wide / (w_wide + w_flat);
        let got = wide_picks as f64 / n as f64;
        assert!((got - expected).abs() < 0.02, "got {got}, expected {expected}");
    }

    #[test]
    fn resample_uniform_on_zero_weights() {
        // Single-action Q-vectors: soft_value == q == min q, gap 0.
        let pool = vec![sample(vec![2.0]), sample(vec![4.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = viper_resample(&pool, &mut rng).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn transfer_file_round_trip_is_exact() {
        let teacher = tiny_teacher();
        let samples = collect(&teacher, 30, CollectMode::Greedy, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("transfer.csv");
        save_transfer_set(&samples, &path, "seed=5").unwrap();
        let loaded = load_transfer_set(&path).unwrap();
        assert_eq!(samples, loaded);
    }

    #[test]
    fn transfer_file_rejects_inconsistent_action() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "2,2\n0.0,0.0,1,3.0,1.0\n").unwrap();
        let err = load_transfer_set(&path).unwrap_err();
        assert!(err.to_string().contains("argmax"), "{err}");
    }
}
