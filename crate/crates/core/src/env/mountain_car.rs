//! MountainCar dynamics: an underpowered car in a valley; actions push
//! left, coast, or push right.

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
const GOAL_POSITION: f64 = 0.5;
const GOAL_VELOCITY: f64 = 0.0;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

/// One tick; state is `[position, velocity]` (the trailing two components
/// of the fixed-size buffer are unused). Reward is -1.0 every step.
pub fn step(state: &[f64; 4], action: usize) -> ([f64; 4], f64, bool) {
    let [position, velocity, ..] = *state;
    let mut velocity =
        velocity + (action as f64 - 1.0) * FORCE + (3.0 * position).cos() * (-GRAVITY);
    velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
    let position = (position + velocity).clamp(MIN_POSITION, MAX_POSITION);
    if position == MIN_POSITION && velocity < 0.0 {
        velocity = 0.0;
    }
    // Arriving at the goal from below implies positive velocity, so the
    // velocity condition only matters for states seeded at the goal.
    let done = position >= GOAL_POSITION && velocity >= GOAL_VELOCITY;
    ([position, velocity, 0.0, 0.0], -1.0, done)
}
