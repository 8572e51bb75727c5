//! Acrobot dynamics: a two-link pendulum actuated only at the elbow,
//! integrated with a single RK4 step per tick (the published form of this
//! task uses RK4; Euler is far too unstable at dt = 0.2).

use std::f64::consts::PI;

const DT: f64 = 0.2;
const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_POS_1: f64 = 0.5;
const LINK_COM_POS_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const GRAVITY: f64 = 9.8;
const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;

/// One tick; state is `[theta1, theta2, dtheta1, dtheta2]`, torque is
/// `action - 1` in {-1, 0, +1}. Reward is -1.0 every step, the
/// goal-reaching one included, so returns sit in [-max_steps, -1].
pub fn step(state: &[f64; 4], action: usize) -> ([f64; 4], f64, bool) {
    let torque = action as f64 - 1.0;
    let aug = [state[0], state[1], state[2], state[3], torque];
    let ns = rk4(&aug);
    let next = [
        wrap(ns[0], -PI, PI),
        wrap(ns[1], -PI, PI),
        ns[2].clamp(-MAX_VEL_1, MAX_VEL_1),
        ns[3].clamp(-MAX_VEL_2, MAX_VEL_2),
    ];
    let done = -next[0].cos() - (next[1] + next[0]).cos() > 1.0;
    (next, -1.0, done)
}

/// Observation `[cos t1, sin t1, cos t2, sin t2, dt1, dt2]`.
pub fn observation(state: &[f64; 4]) -> Vec<f64> {
    vec![
        state[0].cos(),
        state[0].sin(),
        state[1].cos(),
        state[1].sin(),
        state[2],
        state[3],
    ]
}

fn dsdt(s: &[f64; 5]) -> [f64; 5] {
    let (m1, m2) = (LINK_MASS_1, LINK_MASS_2);
    let l1 = LINK_LENGTH_1;
    let (lc1, lc2) = (LINK_COM_POS_1, LINK_COM_POS_2);
    let (i1, i2) = (LINK_MOI, LINK_MOI);
    let g = GRAVITY;
    let [theta1, theta2, dtheta1, dtheta2, a] = *s;

    let d1 =
        m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0]
}

fn rk4(y0: &[f64; 5]) -> [f64; 5] {
    let dt2 = DT / 2.0;
    let k1 = dsdt(y0);
    let k2 = dsdt(&add_scaled(y0, &k1, dt2));
    let k3 = dsdt(&add_scaled(y0, &k2, dt2));
    let k4 = dsdt(&add_scaled(y0, &k3, DT));
    let mut out = [0.0; 5];
    for i in 0..5 {
        out[i] = y0[i] + DT / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn add_scaled(y: &[f64; 5], k: &[f64; 5], h: f64) -> [f64; 5] {
    let mut out = [0.0; 5];
    for i in 0..5 {
        out[i] = y[i] + h * k[i];
    }
    out
}

fn wrap(mut x: f64, lo: f64, hi: f64) -> f64 {
    let diff = hi - lo;
    while x > hi {
        x -= diff;
    }
    while x < lo {
        x += diff;
    }
    x
}
