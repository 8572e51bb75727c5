//! Cost-sensitive decision trees: pluggable split criteria, best-first
//! growth under an internal-node budget, prediction, cost-ratio feature
//! importance, and a text serialization with rule export.
//!
//! # Arithmetic conventions
//!
//! Several downstream checks compare split decisions against independent
//! reference computations, and one dataset family must make cost reduction
//! vanish identically. The module therefore fixes the floating-point
//! evaluation order and documents it as part of the contract:
//!
//! - Node statistics accumulate sample by sample in the order the node's
//!   index list provides; split sweeps accumulate the left child in
//!   ascending (feature value, sample index) order and obtain the right
//!   child as `parent - left`, elementwise.
//! - Reductions are computed on summed statistics and divided once:
//!   `((m_parent - m_left) - m_right) / denominator`. With the right child
//!   derived by subtraction, a split whose parent and children share the
//!   minimizing action yields exactly 0.0.
//! - Candidate thresholds sit at `(a + b) / 2` for consecutive distinct
//!   sorted values `a < b`, falling back to `a` if rounding pushes the
//!   midpoint outside `[a, b)`. Samples route left iff `value <= threshold`.
//! - The best candidate maximizes gain; exact ties prefer the lower feature
//!   index, then the lower threshold. Gains at or below 1e-12 are treated
//!   as zero.

mod grow;
mod io;
mod split;

pub use grow::grow;
pub use split::{best_split, midpoint_threshold};

use crate::error::{Error, Result};

/// Split-quality measure used when growing a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Drop in misclassification rate against the per-sample labels.
    ErrorReduction,
    /// Drop in the minimal cost rate (min over actions of cost share).
    CostReduction,
    /// Information gain on the cost-share distribution; splits nodes the
    /// cost-rate criterion is blind to.
    CostInfoGain,
    /// Total per-dimension variance decrease of regression targets.
    VarianceReduction,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::ErrorReduction,
        Criterion::CostReduction,
        Criterion::CostInfoGain,
        Criterion::VarianceReduction,
    ];

    pub fn parse(s: &str) -> Result<Criterion> {
        match s {
            "error_reduction" => Ok(Criterion::ErrorReduction),
            "cost_reduction" => Ok(Criterion::CostReduction),
            "cost_info_gain" => Ok(Criterion::CostInfoGain),
            "variance_reduction" => Ok(Criterion::VarianceReduction),
            other => Err(Error::contract(format!("unknown criterion {other:?}"))),
        }
    }

    pub fn is_regression(self) -> bool {
        self == Criterion::VarianceReduction
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::ErrorReduction => "error_reduction",
            Criterion::CostReduction => "cost_reduction",
            Criterion::CostInfoGain => "cost_info_gain",
            Criterion::VarianceReduction => "variance_reduction",
        })
    }
}

/// Additive per-node statistics for the cost-based criteria.
///
/// `cost_sums[k]` is the summed cost of labeling the node `k`;
/// `error_counts[k]` counts samples whose label differs from `k`. A
/// parent's statistics equal the elementwise sum of its children's.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub n: u64,
    pub cost_sums: Vec<f64>,
    pub error_counts: Vec<f64>,
}

impl NodeStats {
    pub fn zeros(k: usize) -> NodeStats {
        NodeStats { n: 0, cost_sums: vec![0.0; k], error_counts: vec![0.0; k] }
    }

    pub fn add_sample(&mut self, costs: &[f64], label: usize) {
        self.n += 1;
        for (k, c) in costs.iter().enumerate() {
            self.cost_sums[k] += c;
            if k != label {
                self.error_counts[k] += 1.0;
            }
        }
    }

    /// Total cost mass `W`, summed in action order.
    pub fn weight(&self) -> f64 {
        self.cost_sums.iter().sum()
    }

    /// Elementwise difference; how split sweeps derive the right child.
    pub fn minus(&self, other: &NodeStats) -> NodeStats {
        debug_assert!(self.n >= other.n);
        NodeStats {
            n: self.n - other.n,
            cost_sums: self
                .cost_sums
                .iter()
                .zip(&other.cost_sums)
                .map(|(a, b)| a - b)
                .collect(),
            error_counts: self
                .error_counts
                .iter()
                .zip(&other.error_counts)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn from_dataset(data: &TreeDataset, indices: &[usize]) -> NodeStats {
        let mut s = NodeStats::zeros(data.n_values());
        for &i in indices {
            s.add_sample(data.values_row(i), data.label(i));
        }
        s
    }
}

/// Additive per-node statistics for variance-reduction regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegStats {
    pub n: u64,
    pub sums: Vec<f64>,
    pub sq_sums: Vec<f64>,
}

impl RegStats {
    pub fn zeros(k: usize) -> RegStats {
        RegStats { n: 0, sums: vec![0.0; k], sq_sums: vec![0.0; k] }
    }

    pub fn add_sample(&mut self, targets: &[f64]) {
        self.n += 1;
        for (k, v) in targets.iter().enumerate() {
            self.sums[k] += v;
            self.sq_sums[k] += v * v;
        }
    }

    pub fn minus(&self, other: &RegStats) -> RegStats {
        debug_assert!(self.n >= other.n);
        RegStats {
            n: self.n - other.n,
            sums: self.sums.iter().zip(&other.sums).map(|(a, b)| a - b).collect(),
            sq_sums: self
                .sq_sums
                .iter()
                .zip(&other.sq_sums)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn from_dataset(data: &TreeDataset, indices: &[usize]) -> RegStats {
        let mut s = RegStats::zeros(data.n_values());
        for &i in indices {
            s.add_sample(data.values_row(i));
        }
        s
    }

    /// Total squared deviation from the mean, summed over dimensions.
    pub fn total_deviation(&self) -> f64 {
        let n = self.n as f64;
        let mut total = 0.0;
        for k in 0..self.sums.len() {
            total += self.sq_sums[k] - self.sums[k] * self.sums[k] / n;
        }
        total
    }
}

fn min_with_argmin(xs: &[f64]) -> (f64, usize) {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate().skip(1) {
        if *v < xs[best] {
            best = i;
        }
    }
    (xs[best], best)
}

/// Per-action cost shares `C^k / W`, with the minimal rate and its action
/// (ties to the smallest index). `None` signals a zero-weight node, which
/// callers label by majority instead.
pub fn cost_rates(stats: &NodeStats) -> Option<(Vec<f64>, f64, usize)> {
    let w = stats.weight();
    if w <= 0.0 {
        return None;
    }
    let rates: Vec<f64> = stats.cost_sums.iter().map(|c| c / w).collect();
    let (min_rate, arg) = min_with_argmin(&rates);
    Some((rates, min_rate, arg))
}

/// Entropy of the cost-share distribution, `-sum (C^k/W) ln(C^k/W)` with
/// `0 ln 0 := 0`. A zero-weight node has entropy 0.
pub fn cost_entropy(stats: &NodeStats) -> f64 {
    let w = stats.weight();
    if w <= 0.0 {
        return 0.0;
    }
    let mut h = 0.0;
    for c in &stats.cost_sums {
        if *c > 0.0 {
            let r = c / w;
            h -= r * r.ln();
        }
    }
    h
}

fn check_children(parent_n: u64, left_n: u64, right_n: u64) -> Result<()> {
    if parent_n == 0 || left_n == 0 || right_n == 0 {
        return Err(Error::contract("criterion evaluated on an empty node"));
    }
    debug_assert_eq!(parent_n, left_n + right_n);
    Ok(())
}

/// Drop in misclassification rate from splitting the parent:
/// `(min E_p - min E_l - min E_r) / N_p`, where `E^a` counts samples a
/// node mislabels when predicting `a`.
pub fn error_reduction(parent: &NodeStats, left: &NodeStats, right: &NodeStats) -> Result<f64> {
    check_children(parent.n, left.n, right.n)?;
    let (ep, _) = min_with_argmin(&parent.error_counts);
    let (el, _) = min_with_argmin(&left.error_counts);
    let (er, _) = min_with_argmin(&right.error_counts);
    Ok(((ep - el) - er) / parent.n as f64)
}

/// Drop in the minimal cost rate: `(min C_p - min C_l - min C_r) / W_p`.
///
/// Exactly 0.0 whenever parent and both children share the cost-minimizing
/// action (the sums cancel before the division). A zero-weight parent has
/// nothing to reduce and returns 0.
pub fn cost_reduction(parent: &NodeStats, left: &NodeStats, right: &NodeStats) -> Result<f64> {
    check_children(parent.n, left.n, right.n)?;
    let w = parent.weight();
    if w <= 0.0 {
        return Ok(0.0);
    }
    let (cp, _) = min_with_argmin(&parent.cost_sums);
    let (cl, _) = min_with_argmin(&left.cost_sums);
    let (cr, _) = min_with_argmin(&right.cost_sums);
    Ok(((cp - cl) - cr) / w)
}

/// Information gain on cost shares:
/// `H(parent) - (W_l/W_p) H(left) - (W_r/W_p) H(right)`.
///
/// Because the parent's share vector is the cost-mass-weighted mixture of
/// the children's, concavity of entropy makes this nonnegative, and it is
/// zero precisely when both children carry the same share vector. That is
/// what lets it split nodes whose minimizing action never changes.
pub fn cost_info_gain(parent: &NodeStats, left: &NodeStats, right: &NodeStats) -> Result<f64> {
    check_children(parent.n, left.n, right.n)?;
    let w = parent.weight();
    if w <= 0.0 {
        return Ok(0.0);
    }
    let hp = cost_entropy(parent);
    let hl = cost_entropy(left);
    let hr = cost_entropy(right);
    Ok(hp - (left.weight() / w) * hl - (right.weight() / w) * hr)
}

/// Decrease in total per-dimension variance:
/// `(I_p - I_l - I_r) / N_p` with `I = sum_k (sq_k - sum_k^2 / n)`.
pub fn variance_reduction(parent: &RegStats, left: &RegStats, right: &RegStats) -> Result<f64> {
    check_children(parent.n, left.n, right.n)?;
    let ip = parent.total_deviation();
    let il = left.total_deviation();
    let ir = right.total_deviation();
    Ok(((ip - il) - ir) / parent.n as f64)
}

/// One candidate threshold test with its criterion gain.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub criterion: Criterion,
}

/// Samples a tree is grown on: feature rows, per-sample value rows (cost
/// rows for the classification criteria, regression targets for variance
/// reduction), and an action label per sample.
#[derive(Debug, Clone)]
pub struct TreeDataset {
    features: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_features: usize,
    n_values: usize,
}

impl TreeDataset {
    pub fn new(features: Vec<Vec<f64>>, values: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<TreeDataset> {
        if features.is_empty() {
            return Err(Error::contract("dataset has no samples"));
        }
        if features.len() != values.len() || features.len() != labels.len() {
            return Err(Error::contract(format!(
                "dataset rows disagree: {} feature rows, {} value rows, {} labels",
                features.len(),
                values.len(),
                labels.len()
            )));
        }
        let n_features = features[0].len();
        let n_values = values[0].len();
        if n_features == 0 || n_values == 0 {
            return Err(Error::contract("dataset rows must be non-empty"));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != n_features || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(format!("bad feature row at sample {i}")));
            }
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != n_values || row.iter().any(|v| !v.is_finite()) {
                return Err(Error::contract(format!("bad value row at sample {i}")));
            }
        }
        for (i, l) in labels.iter().enumerate() {
            if *l >= n_values {
                return Err(Error::contract(format!(
                    "label {l} at sample {i} exceeds {} actions",
                    n_values
                )));
            }
        }
        Ok(TreeDataset { features, values, labels, n_features, n_values })
    }

    /// Classification dataset whose labels are each row's cheapest action.
    pub fn from_cost_rows(features: Vec<Vec<f64>>, costs: Vec<Vec<f64>>) -> Result<TreeDataset> {
        let labels = costs.iter().map(|row| min_with_argmin(row).1).collect();
        TreeDataset::new(features, costs, labels)
    }

    pub fn n_samples(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Width of the value rows (the action count K for both cost rows and
    /// Q-vector targets).
    pub fn n_values(&self) -> usize {
        self.n_values
    }

    pub fn feature(&self, sample: usize, feature: usize) -> f64 {
        self.features[sample][feature]
    }

    pub fn feature_row(&self, sample: usize) -> &[f64] {
        &self.features[sample]
    }

    pub fn values_row(&self, sample: usize) -> &[f64] {
        &self.values[sample]
    }

    pub fn label(&self, sample: usize) -> usize {
        self.labels[sample]
    }
}

/// Growth settings: the split criterion and the internal-node budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeConfig {
    pub criterion: Criterion,
    pub max_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Internal {
        feature: usize,
        threshold: f64,
        /// Criterion gain recorded at growth time.
        gain: f64,
        /// This node's share of the root's weight (cost mass, or sample
        /// count for regression); used by feature importance.
        weight_frac: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        action: usize,
    },
    /// Regression leaf holding the mean target vector; predicts its argmax.
    RegLeaf {
        q_mean: Vec<f64>,
    },
}

/// Binary tree of axis-aligned threshold tests. Node 0 is the root; a
/// state routes left iff `state[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_actions: usize,
}

impl PolicyTree {
    pub fn internal_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Internal { .. }))
            .count()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.len() - self.internal_count()
    }

    pub fn predict(&self, state: &[f64]) -> usize {
        debug_assert_eq!(state.len(), self.n_features);
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Internal { feature, threshold, left, right, .. } => {
                    at = if state[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { action } => return *action,
                Node::RegLeaf { q_mean } => {
                    let mut best = 0;
                    for (i, v) in q_mean.iter().enumerate().skip(1) {
                        if *v > q_mean[best] {
                            best = i;
                        }
                    }
                    return best;
                }
            }
        }
    }

    /// Cost-ratio feature importance: each internal node contributes its
    /// weight fraction times its gain to the feature it splits on, and the
    /// vector is normalized to sum to 1. A tree with no informative splits
    /// reports the uniform vector.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let Node::Internal { feature, gain, weight_frac, .. } = node {
                imp[*feature] += weight_frac * gain;
            }
        }
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for v in &mut imp {
                *v /= total;
            }
        } else {
            let u = 1.0 / self.n_features as f64;
            for v in &mut imp {
                *v = u;
            }
        }
        imp
    }
}
