//! Deterministic, seedable classic-control tasks behind a uniform
//! episodic-MDP interface.
//!
//! Dynamics follow the canonical published physics for each task (Euler
//! integration for CartPole, the standard update for MountainCar, RK4 for
//! Acrobot) so returns land on the usual scales. All randomness is drawn
//! from a counter-based PRNG seeded per episode; the transitions themselves
//! are deterministic.

mod acrobot;
mod cartpole;
mod mountain_car;

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The three supported tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    CartPole,
    MountainCar,
    Acrobot,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::CartPole, Task::MountainCar, Task::Acrobot];

    pub fn spec(self) -> EnvSpec {
        match self {
            Task::CartPole => EnvSpec {
                name: self,
                obs_dim: 4,
                n_actions: 2,
                max_steps: 200,
                reward_range: (1.0, 1.0),
            },
            Task::MountainCar => EnvSpec {
                name: self,
                obs_dim: 2,
                n_actions: 3,
                max_steps: 200,
                reward_range: (-1.0, -1.0),
            },
            Task::Acrobot => EnvSpec {
                name: self,
                obs_dim: 6,
                n_actions: 3,
                max_steps: 500,
                reward_range: (-1.0, -1.0),
            },
        }
    }

    /// Observation component names, used when exporting tree rules.
    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            Task::CartPole => &[
                "cart_position",
                "cart_velocity",
                "pole_angle",
                "pole_angular_velocity",
            ],
            Task::MountainCar => &["position", "velocity"],
            Task::Acrobot => &[
                "cos_theta1",
                "sin_theta1",
                "cos_theta2",
                "sin_theta2",
                "theta1_velocity",
                "theta2_velocity",
            ],
        }
    }

    pub fn parse(name: &str) -> Result<Task> {
        match name.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "cartpole" => Ok(Task::CartPole),
            "mountaincar" => Ok(Task::MountainCar),
            "acrobot" => Ok(Task::Acrobot),
            other => Err(Error::contract(format!("unknown task `{other}`"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::CartPole => write!(f, "cartpole"),
            Task::MountainCar => write!(f, "mountain_car"),
            Task::Acrobot => write!(f, "acrobot"),
        }
    }
}

/// Static description of a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvSpec {
    pub name: Task,
    pub obs_dim: usize,
    pub n_actions: usize,
    pub max_steps: usize,
    /// Per-step reward bounds.
    pub reward_range: (f64, f64),
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Episode hit the step cap. Reported separately from `done` so value
    /// bootstrapping can treat the two differently.
    pub truncated: bool,
}

/// A single environment instance. Instances are independent; run many in
/// parallel for rollout collection.
#[derive(Debug, Clone)]
pub struct Env {
    task: Task,
    spec: EnvSpec,
    /// Internal physical state; Acrobot stores joint angles/velocities,
    /// the others store the observation directly.
    state: [f64; 4],
    steps: usize,
    finished: bool,
}

impl Env {
    pub fn new(task: Task) -> Env {
        Env {
            task,
            spec: task.spec(),
            state: [0.0; 4],
            steps: 0,
            finished: true,
        }
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Starts a new episode from the task's standard initial distribution.
    /// Identical seeds give bitwise-identical episodes.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.state = match self.task {
            Task::CartPole => {
                let mut s = [0.0; 4];
                for v in &mut s {
                    *v = rng.gen_range(-0.05..0.05);
                }
                s
            }
            Task::MountainCar => [rng.gen_range(-0.6..-0.4), 0.0, 0.0, 0.0],
            Task::Acrobot => {
                let mut s = [0.0; 4];
                for v in &mut s {
                    *v = rng.gen_range(-0.1..0.1);
                }
                s
            }
        };
        self.steps = 0;
        self.finished = false;
        self.observation()
    }

    /// Starts an episode from an explicit internal state (CartPole and
    /// Acrobot take 4 components, MountainCar 2). Acrobot components are
    /// the joint state `[theta1, theta2, dtheta1, dtheta2]`, not the
    /// observation.
    pub fn reset_from(&mut self, state: &[f64]) -> Result<Vec<f64>> {
        let dim = match self.task {
            Task::CartPole | Task::Acrobot => 4,
            Task::MountainCar => 2,
        };
        if state.len() != dim {
            return Err(Error::contract(format!(
                "reset_from expects {dim} components for {}, got {}",
                self.task,
                state.len()
            )));
        }
        self.state = [0.0; 4];
        self.state[..dim].copy_from_slice(state);
        self.steps = 0;
        self.finished = false;
        Ok(self.observation())
    }

    /// Advances the dynamics one tick.
    pub fn step(&mut self, action: usize) -> Result<Transition> {
        if self.finished {
            return Err(Error::contract(format!(
                "step called on a finished {} episode",
                self.task
            )));
        }
        if action >= self.spec.n_actions {
            return Err(Error::contract(format!(
                "action {action} out of range for {} (n_actions = {})",
                self.task, self.spec.n_actions
            )));
        }
        let (state, reward, done) = match self.task {
            Task::CartPole => cartpole::step(&self.state, action),
            Task::MountainCar => mountain_car::step(&self.state, action),
            Task::Acrobot => acrobot::step(&self.state, action),
        };
        self.state = state;
        self.steps += 1;
        let truncated = self.steps == self.spec.max_steps;
        self.finished = done || truncated;
        Ok(Transition {
            next_state: self.observation(),
            reward,
            done,
            truncated,
        })
    }

    pub fn observation(&self) -> Vec<f64> {
        match self.task {
            Task::CartPole => self.state.to_vec(),
            Task::MountainCar => self.state[..2].to_vec(),
            Task::Acrobot => acrobot::observation(&self.state),
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_bounds_match_initial_distributions() {
        let mut env = Env::new(Task::CartPole);
        for seed in 0..50 {
            let s = env.reset(seed);
            assert_eq!(s.len(), 4);
            assert!(s.iter().all(|v| (-0.05..0.05).contains(v)));
        }
        let mut env = Env::new(Task::MountainCar);
        for seed in 0..50 {
            let s = env.reset(seed);
            assert!((-0.6..-0.4).contains(&s[0]));
            assert_eq!(s[1], 0.0);
        }
        let mut env = Env::new(Task::Acrobot);
        for seed in 0..50 {
            let s = env.reset(seed);
            assert_eq!(s.len(), 6);
            // cos of a small angle stays near 1
            assert!(s[0] > 0.99 && s[2] > 0.99);
        }
    }

    #[test]
    fn reset_is_deterministic() {
        for task in Task::ALL {
            let mut a = Env::new(task);
            let mut b = Env::new(task);
            assert_eq!(a.reset(7), b.reset(7));
            let ta = a.step(0).unwrap();
            let tb = b.step(0).unwrap();
            assert_eq!(ta, tb);
        }
    }

    #[test]
    fn fixed_action_sequence_reproduces_states_bitwise() {
        for task in Task::ALL {
            let run = |seed: u64| {
                let mut env = Env::new(task);
                let mut states = vec![env.reset(seed)];
                for i in 0..30 {
                    let t = env.step(i % env.spec().n_actions).unwrap();
                    states.push(t.next_state.clone());
                    if t.done || t.truncated {
                        break;
                    }
                }
                states
            };
            assert_eq!(run(123), run(123));
        }
    }

    #[test]
    fn step_contract_violations() {
        let mut env = Env::new(Task::CartPole);
        env.reset(0);
        assert!(env.step(2).is_err());
        // finish the episode by truncation or fall, then step again
        loop {
            let t = env.step(0).unwrap();
            if t.done || t.truncated {
                break;
            }
        }
        assert!(matches!(env.step(0), Err(Error::Contract(_))));
    }

    #[test]
    fn truncation_at_max_steps() {
        let mut env = Env::new(Task::MountainCar);
        env.reset(3);
        let mut last = None;
        for _ in 0..200 {
            let t = env.step(1).unwrap();
            last = Some(t);
        }
        let t = last.unwrap();
        assert!(t.truncated);
        assert_eq!(env.steps_taken(), 200);
    }

    #[test]
    fn return_ranges_hold_under_random_play() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for task in Task::ALL {
            let spec = task.spec();
            for ep in 0..5 {
                let mut env = Env::new(task);
                env.reset(ep);
                let mut total = 0.0;
                let mut steps = 0;
                loop {
                    let a = rng.gen_range(0..spec.n_actions);
                    let t = env.step(a).unwrap();
                    total += t.reward;
                    steps += 1;
                    assert!(t.reward >= spec.reward_range.0 && t.reward <= spec.reward_range.1);
                    if t.done || t.truncated {
                        break;
                    }
                }
                assert!(steps <= spec.max_steps);
                match task {
                    Task::CartPole => assert!((1.0..=200.0).contains(&total)),
                    Task::MountainCar => assert!((-200.0..=-1.0).contains(&total)),
                    Task::Acrobot => assert!((-500.0..=-1.0).contains(&total)),
                }
            }
        }
    }
}
