//! Best-first tree growth under an internal-node budget.

use super::{
    best_split, cost_rates, Criterion, Node, NodeStats, PolicyTree, RegStats, SplitCandidate,
    TreeConfig, TreeDataset,
};
use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

struct FrontierEntry {
    priority: f64,
    node_id: usize,
    weight_frac: f64,
    candidate: SplitCandidate,
    indices: Vec<usize>,
}

impl PartialEq for FrontierEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for FrontierEntry {}
impl PartialOrd for FrontierEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FrontierEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on priority; equal priorities expand the older node.
        self.priority
            .total_cmp(&other.priority)
            .then(other.node_id.cmp(&self.node_id))
    }
}

/// A node's share of the root weight: cost mass for the cost criteria,
/// sample count for regression.
fn node_weight(data: &TreeDataset, indices: &[usize], criterion: Criterion) -> f64 {
    if criterion.is_regression() {
        indices.len() as f64
    } else {
        NodeStats::from_dataset(data, indices).weight()
    }
}

fn make_leaf(data: &TreeDataset, indices: &[usize], criterion: Criterion) -> Node {
    if criterion.is_regression() {
        let stats = RegStats::from_dataset(data, indices);
        let n = stats.n as f64;
        Node::RegLeaf { q_mean: stats.sums.iter().map(|s| s / n).collect() }
    } else {
        let stats = NodeStats::from_dataset(data, indices);
        let action = match cost_rates(&stats) {
            Some((_, _, argmin)) => argmin,
            // Zero cost mass carries no preference; fall back to the
            // majority label (the fewest-errors action).
            None => {
                let mut best = 0;
                for (k, e) in stats.error_counts.iter().enumerate().skip(1) {
                    if *e < stats.error_counts[best] {
                        best = k;
                    }
                }
                best
            }
        };
        Node::Leaf { action }
    }
}

/// Grows a tree by repeatedly expanding the frontier leaf with the largest
/// weighted gain (`W_node / W_root * gain`) until `max_nodes` internal
/// nodes exist or no leaf has a positive-gain split. Growth is
/// deterministic: equal priorities expand the earlier-created node.
pub fn grow(data: &TreeDataset, config: &TreeConfig) -> Result<PolicyTree> {
    if config.max_nodes == 0 {
        return Err(Error::contract("node budget must be at least 1"));
    }
    if !config.criterion.is_regression() {
        for i in 0..data.n_samples() {
            if data.values_row(i).iter().any(|c| *c < 0.0) {
                return Err(Error::contract(format!(
                    "negative cost at sample {i}; cost criteria need nonnegative rows"
                )));
            }
        }
    }

    let root_indices: Vec<usize> = (0..data.n_samples()).collect();
    let root_weight = node_weight(data, &root_indices, config.criterion);
    let mut nodes = vec![make_leaf(data, &root_indices, config.criterion)];
    let mut frontier = BinaryHeap::new();
    if let Some(candidate) = best_split(data, &root_indices, config.criterion) {
        frontier.push(FrontierEntry {
            priority: candidate.gain,
            node_id: 0,
            weight_frac: 1.0,
            candidate,
            indices: root_indices,
        });
    }

    let mut internal = 0;
    while internal < config.max_nodes {
        let Some(entry) = frontier.pop() else { break };
        let FrontierEntry { candidate, indices, node_id, weight_frac, .. } = entry;

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| data.feature(i, candidate.feature) <= candidate.threshold);

        let left_id = nodes.len();
        nodes.push(make_leaf(data, &left_idx, config.criterion));
        let right_id = nodes.len();
        nodes.push(make_leaf(data, &right_idx, config.criterion));
        nodes[node_id] = Node::Internal {
            feature: candidate.feature,
            threshold: candidate.threshold,
            gain: candidate.gain,
            weight_frac,
            left: left_id,
            right: right_id,
        };
        internal += 1;

        for (child_id, child_idx) in [(left_id, left_idx), (right_id, right_idx)] {
            if let Some(c) = best_split(data, &child_idx, config.criterion) {
                let frac = node_weight(data, &child_idx, config.criterion) / root_weight;
                frontier.push(FrontierEntry {
                    priority: frac * c.gain,
                    node_id: child_id,
                    weight_frac: frac,
                    candidate: c,
                    indices: child_idx,
                });
            }
        }
    }

    Ok(PolicyTree {
        nodes,
        n_features: data.n_features(),
        n_actions: data.n_values(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band_dataset() -> TreeDataset {
        // Three regions on one axis (0 | 1 1 | 0): perfect fit needs two
        // splits.
        let features = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let costs = vec![
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ];
        TreeDataset::from_cost_rows(features, costs).unwrap()
    }

    #[test]
    fn pure_dataset_is_a_single_leaf() {
        let data = TreeDataset::from_cost_rows(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![vec![0.0, 1.0]; 3],
        )
        .unwrap();
        let tree = grow(&data, &TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: 7 })
            .unwrap();
        assert_eq!(tree.nodes, vec![Node::Leaf { action: 0 }]);
    }

    #[test]
    fn budget_of_one_makes_a_stump() {
        let data = band_dataset();
        let tree = grow(&data, &TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: 1 })
            .unwrap();
        assert_eq!(tree.internal_count(), 1);
        assert_eq!(tree.leaf_count(), 2);
    }

    #[test]
    fn band_fits_with_two_internal_nodes() {
        let data = band_dataset();
        let tree = grow(&data, &TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: 8 })
            .unwrap();
        assert_eq!(tree.internal_count(), 2);
        for i in 0..4 {
            let row = data.feature_row(i);
            assert_eq!(tree.predict(row), data.label(i), "sample {i}");
        }
    }

    #[test]
    fn training_cost_non_increasing_in_budget() {
        // Fixed pseudo-random dataset; total picked-leaf cost must fall (or
        // hold) as the budget grows.
        let mut features = Vec::new();
        let mut costs = Vec::new();
        let mut x = 1u64;
        for _ in 0..64 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((x >> 11) & 0xffff) as f64 / 65536.0;
            let b = ((x >> 27) & 0xffff) as f64 / 65536.0;
            let c = ((x >> 43) & 0xffff) as f64 / 65536.0;
            features.push(vec![a, b]);
            costs.push(vec![c, 1.0 - c]);
        }
        let data = TreeDataset::from_cost_rows(features, costs).unwrap();
        let mut prev = f64::INFINITY;
        for budget in [1, 3, 7, 15] {
            let tree = grow(
                &data,
                &TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: budget },
            )
            .unwrap();
            let total: f64 = (0..data.n_samples())
                .map(|i| data.values_row(i)[tree.predict(data.feature_row(i))])
                .sum();
            assert!(total <= prev + 1e-12, "budget {budget}: {total} > {prev}");
            prev = total;
        }
    }

    #[test]
    fn growth_is_deterministic() {
        let data = band_dataset();
        let cfg = TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: 5 };
        let a = grow(&data, &cfg).unwrap();
        let b = grow(&data, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn regression_growth_produces_reg_leaves() {
        let data = TreeDataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0], vec![0.0, 2.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let tree = grow(
            &data,
            &TreeConfig { criterion: Criterion::VarianceReduction, max_nodes: 3 },
        )
        .unwrap();
        assert_eq!(tree.predict(&[0.5]), 0);
        assert_eq!(tree.predict(&[2.5]), 1);
        assert!(tree
            .nodes
            .iter()
            .any(|n| matches!(n, Node::RegLeaf { .. })));
    }

    #[test]
    fn negative_costs_rejected_for_cost_criteria() {
        let data = TreeDataset::new(
            vec![vec![0.0], vec![1.0]],
            vec![vec![-0.5, 1.0], vec![1.0, 0.0]],
            vec![0, 1],
        )
        .unwrap();
        let err = grow(
            &data,
            &TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: 1 },
        )
        .unwrap_err();
        assert!(err.to_string().contains("negative cost"));
        // The same rows are legal regression targets.
        assert!(grow(
            &data,
            &TreeConfig { criterion: Criterion::VarianceReduction, max_nodes: 1 },
        )
        .is_ok());
    }

    #[test]
    fn zero_budget_is_a_contract_error() {
        let data = band_dataset();
        assert!(grow(&data, &TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: 0 })
            .is_err());
    }

    #[test]
    fn all_zero_costs_fall_back_to_majority_label() {
        let data = TreeDataset::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![vec![0.0, 0.0]; 3],
            vec![1, 1, 0],
        )
        .unwrap();
        let tree = grow(&data, &TreeConfig { criterion: Criterion::CostInfoGain, max_nodes: 3 })
            .unwrap();
        assert_eq!(tree.nodes, vec![Node::Leaf { action: 1 }]);
    }
}
