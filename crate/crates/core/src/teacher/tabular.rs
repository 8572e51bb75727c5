//! Tabular soft-Q teacher: a uniform grid over (a representation of) the
//! observation space with one Q-vector per cell, trained by temporal
//! difference backups toward a temperature-scaled soft value target.

use super::soft::{argmax, soft_value_with_temperature};
use super::Teacher;
use crate::env::{Env, Task};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

/// How observations are mapped to the vector the grid discretizes.
///
/// The two-link pendulum's observation carries each joint angle as a
/// cosine/sine pair; binning those independently wastes cells and splits
/// wrapped angles across bins, so its grid runs over the recovered angles
/// instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StateRepr {
    Identity,
    JointAngles,
}

impl StateRepr {
    fn for_task(task: Task) -> StateRepr {
        match task {
            Task::Acrobot => StateRepr::JointAngles,
            _ => StateRepr::Identity,
        }
    }

    fn apply(self, obs: &[f64]) -> Vec<f64> {
        match self {
            StateRepr::Identity => obs.to_vec(),
            StateRepr::JointAngles => vec![
                obs[1].atan2(obs[0]),
                obs[3].atan2(obs[2]),
                obs[4],
                obs[5],
            ],
        }
    }
}

/// Uniform per-dimension binning with saturating edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    bins: Vec<usize>,
    low: Vec<f64>,
    high: Vec<f64>,
}

impl Discretizer {
    pub fn new(bins: Vec<usize>, low: Vec<f64>, high: Vec<f64>) -> Result<Discretizer> {
        if bins.is_empty() || bins.len() != low.len() || bins.len() != high.len() {
            return Err(Error::contract(format!(
                "discretizer dims disagree: {} bins, {} low, {} high",
                bins.len(),
                low.len(),
                high.len()
            )));
        }
        for i in 0..bins.len() {
            if bins[i] == 0 {
                return Err(Error::contract(format!("dimension {i} has zero bins")));
            }
            if !(low[i] < high[i]) {
                return Err(Error::contract(format!(
                    "dimension {i} bounds [{}, {}] are not increasing",
                    low[i], high[i]
                )));
            }
        }
        Ok(Discretizer { bins, low, high })
    }

    pub fn n_cells(&self) -> usize {
        self.bins.iter().product()
    }

    /// Flattened cell index; values outside the bounds land in edge bins.
    pub fn cell(&self, features: &[f64]) -> usize {
        debug_assert_eq!(features.len(), self.bins.len());
        let mut idx = 0;
        for i in 0..self.bins.len() {
            let span = self.high[i] - self.low[i];
            let frac = (features[i] - self.low[i]) / span;
            let b = ((frac * self.bins[i] as f64).floor() as isize)
                .clamp(0, self.bins[i] as isize - 1) as usize;
            idx = idx * self.bins[i] + b;
        }
        idx
    }
}

/// Grid teacher: `n_cells * n_actions` Q-values in row-major order.
#[derive(Debug, Clone)]
pub struct TabularTeacher {
    pub task: Task,
    repr: StateRepr,
    disc: Discretizer,
    n_actions: usize,
    q: Vec<f64>,
}

impl TabularTeacher {
    pub fn q_values(&self, obs: &[f64]) -> Vec<f64> {
        let cell = self.disc.cell(&self.repr.apply(obs));
        let base = cell * self.n_actions;
        self.q[base..base + self.n_actions].to_vec()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tabular {}", self.task);
        let _ = writeln!(
            out,
            "repr {}",
            match self.repr {
                StateRepr::Identity => "identity",
                StateRepr::JointAngles => "joint_angles",
            }
        );
        let _ = write!(out, "bins");
        for b in &self.disc.bins {
            let _ = write!(out, " {b}");
        }
        out.push('\n');
        for (name, vals) in [("low", &self.disc.low), ("high", &self.disc.high)] {
            let _ = write!(out, "{name}");
            for v in vals {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "actions {}", self.n_actions);
        for row in self.q.chunks(self.n_actions) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                let _ = write!(out, "{v}");
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<TabularTeacher> {
        let text = std::fs::read_to_string(path)?;
        let p = path.display().to_string();
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(&p, format!("missing {what} line")))
        };

        let header = next("header")?;
        let task = header
            .strip_prefix("tabular ")
            .and_then(|t| Task::parse(t.trim()).ok())
            .ok_or_else(|| Error::parse(&p, format!("bad header {header:?}")))?;

        let repr_line = next("repr")?;
        let repr = match repr_line.strip_prefix("repr ").map(str::trim) {
            Some("identity") => StateRepr::Identity,
            Some("joint_angles") => StateRepr::JointAngles,
            _ => return Err(Error::parse(&p, format!("bad repr line {repr_line:?}"))),
        };

        let parse_vec = |line: &str, key: &str| -> Result<Vec<f64>> {
            let rest = line
                .strip_prefix(key)
                .ok_or_else(|| Error::parse(&p, format!("expected {key} line, got {line:?}")))?;
            rest.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::parse(&p, format!("bad number {t:?} in {key} line")))
                })
                .collect()
        };

        let bins: Vec<usize> = parse_vec(next("bins")?, "bins")?
            .into_iter()
            .map(|v| v as usize)
            .collect();
        let low = parse_vec(next("low")?, "low")?;
        let high = parse_vec(next("high")?, "high")?;
        let actions_line = next("actions")?;
        let n_actions: usize = actions_line
            .strip_prefix("actions ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| Error::parse(&p, format!("bad actions line {actions_line:?}")))?;

        let disc = Discretizer::new(bins, low, high)?;
        let n_cells = disc.n_cells();
        let mut q = Vec::with_capacity(n_cells * n_actions);
        for line in lines {
            for t in line.split_whitespace() {
                q.push(t.parse::<f64>().map_err(|_| {
                    Error::parse(&p, format!("bad Q value {t:?}"))
                })?);
            }
        }
        if q.len() != n_cells * n_actions {
            return Err(Error::parse(
                &p,
                format!(
                    "expected {} Q values ({} cells x {} actions), found {}",
                    n_cells * n_actions,
                    n_cells,
                    n_actions,
                    q.len()
                ),
            ));
        }
        Ok(TabularTeacher { task, repr, disc, n_actions, q })
    }
}

/// Hyperparameters for [`train_tabular_soft_q`].
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub episodes: usize,
    pub gamma: f64,
    /// Entropy temperature of the backup target. Intentionally small for
    /// tasks with per-step penalties, where a temperature-1 bonus per step
    /// would outweigh the penalty and reward dawdling.
    pub temperature: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub bins: Vec<usize>,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl TrainConfig {
    /// Settings that reach each task's teacher quality bar.
    pub fn default_for(task: Task) -> TrainConfig {
        match task {
            Task::CartPole => TrainConfig {
                episodes: 30000,
                gamma: 0.99,
                temperature: 0.5,
                lr_start: 0.25,
                lr_end: 0.01,
                epsilon_start: 1.0,
                epsilon_end: 0.02,
                bins: vec![6, 8, 12, 12],
                low: vec![-2.4, -3.0, -0.2095, -3.5],
                high: vec![2.4, 3.0, 0.2095, 3.5],
            },
            Task::MountainCar => TrainConfig {
                episodes: 80000,
                gamma: 1.0,
                temperature: 0.02,
                lr_start: 0.5,
                lr_end: 0.01,
                epsilon_start: 0.25,
                epsilon_end: 0.0,
                bins: vec![48, 48],
                low: vec![-1.2, -0.07],
                high: vec![0.6, 0.07],
            },
            Task::Acrobot => TrainConfig {
                episodes: 200000,
                gamma: 1.0,
                temperature: 0.02,
                lr_start: 0.4,
                lr_end: 0.01,
                epsilon_start: 0.2,
                epsilon_end: 0.0,
                // Velocity bounds are tighter than the physical clip range;
                // swing-ups rarely exceed them and the grid resolution is
                // better spent near the origin.
                bins: vec![12, 12, 12, 12],
                low: vec![
                    -std::f64::consts::PI,
                    -std::f64::consts::PI,
                    -8.0,
                    -18.0,
                ],
                high: vec![std::f64::consts::PI, std::f64::consts::PI, 8.0, 18.0],
            },
        }
    }
}

/// Trains a grid teacher with epsilon-greedy rollouts and soft backups.
///
/// The target is `r` on termination and `r + gamma * soft_value(Q(s'))`
/// otherwise; episodes cut off by the step limit still bootstrap, since the
/// state itself is not terminal. Q starts at zero, which is optimistic for
/// the penalty-per-step tasks and drives systematic exploration there.
pub fn train_tabular_soft_q(task: Task, cfg: &TrainConfig, seed: u64) -> Result<Teacher> {
    let spec = task.spec();
    let repr = StateRepr::for_task(task);
    let disc = Discretizer::new(cfg.bins.clone(), cfg.low.clone(), cfg.high.clone())?;
    if cfg.episodes == 0 {
        return Err(Error::contract("episode count must be positive"));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma <= 1.0) {
        return Err(Error::contract(format!("gamma must be in (0, 1], got {}", cfg.gamma)));
    }
    let k = spec.n_actions;
    let mut q = vec![0.0f64; disc.n_cells() * k];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = Env::new(task);

    let frac_den = (cfg.episodes.max(2) - 1) as f64;
    for ep in 0..cfg.episodes {
        let frac = ep as f64 / frac_den;
        let eps = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
        let lr = cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac;

        let mut obs = env.reset(rng.gen());
        let mut cell = disc.cell(&repr.apply(&obs));
        loop {
            let action = if rng.gen::<f64>() < eps {
                rng.gen_range(0..k)
            } else {
                argmax(&q[cell * k..cell * k + k])
            };
            let tr = env.step(action)?;
            let next_cell = disc.cell(&repr.apply(&tr.next_state));
            let target = if tr.done {
                tr.reward
            } else {
                tr.reward
                    + cfg.gamma
                        * soft_value_with_temperature(
                            &q[next_cell * k..next_cell * k + k],
                            cfg.temperature,
                        )?
            };
            let entry = &mut q[cell * k + action];
            *entry += lr * (target - *entry);
            if !entry.is_finite() {
                return Err(Error::Training(format!(
                    "Q diverged at episode {ep} (cell {cell}, action {action})"
                )));
            }
            if tr.done || tr.truncated {
                break;
            }
            obs = tr.next_state;
            cell = next_cell;
        }
        let _ = obs;
    }

    Ok(Teacher::Tabular(TabularTeacher {
        task,
        repr,
        disc,
        n_actions: k,
        q,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Task;

    #[test]
    fn cell_indexing_covers_grid() {
        let d = Discretizer::new(vec![3, 4], vec![0.0, -1.0], vec![3.0, 1.0]).unwrap();
        assert_eq!(d.n_cells(), 12);
        assert_eq!(d.cell(&[0.1, -0.9]), 0);
        assert_eq!(d.cell(&[2.9, 0.9]), 11);
        assert_eq!(d.cell(&[1.5, 0.0]), 1 * 4 + 2);
        // Saturation outside the bounds.
        assert_eq!(d.cell(&[-5.0, -5.0]), 0);
        assert_eq!(d.cell(&[5.0, 5.0]), 11);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Discretizer::new(vec![3], vec![0.0, 1.0], vec![2.0]).is_err());
        assert!(Discretizer::new(vec![0], vec![0.0], vec![1.0]).is_err());
        assert!(Discretizer::new(vec![2], vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn joint_angle_repr_recovers_angles() {
        let theta1 = 0.7f64;
        let theta2 = -2.1f64;
        let obs = [theta1.cos(), theta1.sin(), theta2.cos(), theta2.sin(), 1.5, -3.0];
        let f = StateRepr::JointAngles.apply(&obs);
        assert!((f[0] - theta1).abs() < 1e-12);
        assert!((f[1] - theta2).abs() < 1e-12);
        assert_eq!(&f[2..], &[1.5, -3.0]);
    }

    #[test]
    fn training_is_deterministic_for_a_seed() {
        let mut cfg = TrainConfig::default_for(Task::CartPole);
        cfg.episodes = 30;
        let a = train_tabular_soft_q(Task::CartPole, &cfg, 11).unwrap();
        let b = train_tabular_soft_q(Task::CartPole, &cfg, 11).unwrap();
        let obs = [0.01, -0.02, 0.03, 0.04];
        assert_eq!(a.q_values(&obs), b.q_values(&obs));
        let c = train_tabular_soft_q(Task::CartPole, &cfg, 12).unwrap();
        // A different seed explores differently; identical tables would
        // point at a seeding bug.
        let differs = (0..20).any(|i| {
            let o = [0.002 * i as f64 - 0.02, 0.0, 0.001 * i as f64 - 0.01, 0.0];
            a.q_values(&o) != c.q_values(&o)
        });
        assert!(differs);
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let mut cfg = TrainConfig::default_for(Task::MountainCar);
        cfg.episodes = 20;
        let teacher = train_tabular_soft_q(Task::MountainCar, &cfg, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("teacher.txt");
        teacher.save(&path).unwrap();
        let loaded = TabularTeacher::load(&path).unwrap();
        match &teacher {
            Teacher::Tabular(t) => {
                assert_eq!(t.task, loaded.task);
                assert_eq!(t.q, loaded.q);
                assert_eq!(t.disc, loaded.disc);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn load_rejects_wrong_value_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(
            &path,
            "tabular mountain_car\nrepr identity\nbins 2 2\nlow -1 -1\nhigh 1 1\nactions 3\n1 2 3\n",
        )
        .unwrap();
        let err = TabularTeacher::load(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 12"), "{msg}");
    }

    #[test]
    fn zero_episodes_is_a_contract_error() {
        let mut cfg = TrainConfig::default_for(Task::CartPole);
        cfg.episodes = 0;
        assert!(train_tabular_soft_q(Task::CartPole, &cfg, 0).is_err());
    }
}
