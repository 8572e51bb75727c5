//! Maximum-entropy conversions between Q-vectors, state values, action
//! distributions, and advantages.
//!
//! All functions use temperature 1 (the downstream costs are defined at
//! that scale); the trainer's temperature lives only in
//! [`soft_value_with_temperature`].

use crate::error::{Error, Result};

/// Policy, state value, and advantage derived from one Q-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPolicyOutput {
    pub probs: Vec<f64>,
    pub value: f64,
    pub advantage: Vec<f64>,
}

fn check_q(q: &[f64]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::contract("Q-vector is empty"));
    }
    if let Some(bad) = q.iter().find(|v| !v.is_finite()) {
        return Err(Error::contract(format!("Q-vector contains {bad}")));
    }
    Ok(())
}

/// Index of the maximum, ties resolved to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate().skip(1) {
        if *v > xs[best] {
            best = i;
        }
    }
    best
}

/// Boltzmann distribution over actions: `p_k = exp(q_k) / sum_j exp(q_j)`.
///
/// Shift-stabilized by the max, so adding a constant to every entry leaves
/// the result unchanged down to the floating-point operations themselves.
pub fn softmax_policy(q: &[f64]) -> Result<Vec<f64>> {
    check_q(q)?;
    let m = q[argmax(q)];
    let exps: Vec<f64> = q.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / z).collect())
}

/// Soft state value `V = ln sum_k exp(q_k)`, the log-partition of the
/// Boltzmann policy. Satisfies `max(q) <= V <= max(q) + ln K`.
pub fn soft_value(q: &[f64]) -> Result<f64> {
    check_q(q)?;
    let m = q[argmax(q)];
    let z: f64 = q.iter().map(|v| (v - m).exp()).sum();
    Ok(m + z.ln())
}

/// Temperature-scaled soft value `tau * ln sum_k exp(q_k / tau)`.
///
/// As `tau -> 0` this approaches `max(q)`; at `tau = 1` it equals
/// [`soft_value`]. Used by the tabular trainer's backup target, where a
/// small temperature keeps the entropy bonus from drowning out per-step
/// penalties.
pub fn soft_value_with_temperature(q: &[f64], tau: f64) -> Result<f64> {
    check_q(q)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::contract(format!("temperature must be positive, got {tau}")));
    }
    let m = q[argmax(q)];
    let z: f64 = q.iter().map(|v| ((v - m) / tau).exp()).sum();
    Ok(m + tau * z.ln())
}

/// Advantage `A_k = q_k - V`. Every entry is <= 0 because `V >= max(q)`.
pub fn advantage(q: &[f64]) -> Result<Vec<f64>> {
    let v = soft_value(q)?;
    Ok(q.iter().map(|qk| qk - v).collect())
}

/// Recovers a Q-vector from a policy and a state value: `q_k = ln p_k + V`.
///
/// Inverse of [`softmax_policy`] paired with [`soft_value`]. Probabilities
/// below 1e-12 are clamped up to 1e-12 before the log, so teachers that
/// assign hard zeros lose Q resolution on those actions rather than
/// producing `-inf`. Negative probabilities and distributions that do not
/// sum to 1 are rejected.
pub fn q_from_policy(probs: &[f64], value: f64) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::contract("probability vector is empty"));
    }
    if !value.is_finite() {
        return Err(Error::contract(format!("state value must be finite, got {value}")));
    }
    let mut sum = 0.0;
    for p in probs {
        if !p.is_finite() || *p < 0.0 {
            return Err(Error::contract(format!("invalid probability {p}")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::contract(format!(
            "probabilities sum to {sum}, expected 1 within 1e-6"
        )));
    }
    Ok(probs.iter().map(|p| p.max(1e-12).ln() + value).collect())
}

/// Bundles [`softmax_policy`], [`soft_value`], and [`advantage`] over one
/// Q-vector, sharing the stabilizing max.
pub fn soft_policy(q: &[f64]) -> Result<SoftPolicyOutput> {
    let probs = softmax_policy(q)?;
    let value = soft_value(q)?;
    let adv = q.iter().map(|qk| qk - value).collect();
    Ok(SoftPolicyOutput { probs, value, advantage: adv })
}
