//! Exhaustive single-node split search over all (feature, threshold)
//! candidates, following the arithmetic conventions documented at the
//! module root.

use super::{
    cost_info_gain, cost_reduction, error_reduction, variance_reduction, Criterion, NodeStats,
    RegStats, SplitCandidate, TreeDataset,
};

/// Candidate threshold between consecutive distinct values `a < b`: their
/// midpoint, or `a` itself if rounding lands the midpoint outside `[a, b)`.
/// Routing sends `value <= threshold` left, so either choice separates the
/// two values.
pub fn midpoint_threshold(a: f64, b: f64) -> f64 {
    debug_assert!(a < b);
    let t = (a + b) / 2.0;
    if t >= a && t < b {
        t
    } else {
        a
    }
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Best {
    fn offer(&mut self, gain: f64, feature: usize, threshold: f64) {
        let better = gain > self.gain
            || (gain == self.gain
                && (feature < self.feature
                    || (feature == self.feature && threshold < self.threshold)));
        if better {
            self.gain = gain;
            self.feature = feature;
            self.threshold = threshold;
        }
    }
}

/// Finds the gain-maximizing split of `indices` under `criterion`, or
/// `None` when no candidate clears the 1e-12 gain floor (including nodes
/// with fewer than two samples or no distinct feature values). Ties prefer
/// the lower feature index, then the lower threshold.
pub fn best_split(
    data: &TreeDataset,
    indices: &[usize],
    criterion: Criterion,
) -> Option<SplitCandidate> {
    if indices.len() < 2 {
        return None;
    }
    let mut best = Best { gain: f64::NEG_INFINITY, feature: 0, threshold: 0.0 };
    if criterion.is_regression() {
        scan_regression(data, indices, &mut best);
    } else {
        scan_costs(data, indices, criterion, &mut best);
    }
    if best.gain > 1e-12 {
        Some(SplitCandidate {
            feature: best.feature,
            threshold: best.threshold,
            gain: best.gain,
            criterion,
        })
    } else {
        None
    }
}

/// Indices sorted ascending by (feature value, sample index).
fn sorted_by_feature(data: &TreeDataset, indices: &[usize], feature: usize) -> Vec<usize> {
    let mut order = indices.to_vec();
    order.sort_by(|&a, &b| {
        data.feature(a, feature)
            .total_cmp(&data.feature(b, feature))
            .then(a.cmp(&b))
    });
    order
}

fn scan_costs(data: &TreeDataset, indices: &[usize], criterion: Criterion, best: &mut Best) {
    let parent = NodeStats::from_dataset(data, indices);
    for f in 0..data.n_features() {
        let order = sorted_by_feature(data, indices, f);
        let mut left = NodeStats::zeros(data.n_values());
        let mut i = 0;
        while i < order.len() {
            let v = data.feature(order[i], f);
            while i < order.len() && data.feature(order[i], f) == v {
                left.add_sample(data.values_row(order[i]), data.label(order[i]));
                i += 1;
            }
            if i == order.len() {
                break;
            }
            let right = parent.minus(&left);
            let gain = match criterion {
                Criterion::ErrorReduction => error_reduction(&parent, &left, &right),
                Criterion::CostReduction => cost_reduction(&parent, &left, &right),
                Criterion::CostInfoGain => cost_info_gain(&parent, &left, &right),
                Criterion::VarianceReduction => unreachable!(),
            }
            .expect("children are non-empty by construction");
            best.offer(gain, f, midpoint_threshold(v, data.feature(order[i], f)));
        }
    }
}

fn scan_regression(data: &TreeDataset, indices: &[usize], best: &mut Best) {
    let parent = RegStats::from_dataset(data, indices);
    for f in 0..data.n_features() {
        let order = sorted_by_feature(data, indices, f);
        let mut left = RegStats::zeros(data.n_values());
        let mut i = 0;
        while i < order.len() {
            let v = data.feature(order[i], f);
            while i < order.len() && data.feature(order[i], f) == v {
                left.add_sample(data.values_row(order[i]));
                i += 1;
            }
            if i == order.len() {
                break;
            }
            let right = parent.minus(&left);
            let gain = variance_reduction(&parent, &left, &right)
                .expect("children are non-empty by construction");
            best.offer(gain, f, midpoint_threshold(v, data.feature(order[i], f)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_candidates_on_constant_features() {
        let data = TreeDataset::from_cost_rows(
            vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let idx = [0, 1, 2];
        for c in Criterion::ALL {
            assert!(best_split(&data, &idx, c).is_none(), "{c}");
        }
    }

    #[test]
    fn separable_pair_splits_at_midpoint() {
        let data = TreeDataset::from_cost_rows(
            vec![vec![0.0], vec![1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let s = best_split(&data, &[0, 1], Criterion::CostReduction).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
        assert_eq!(s.gain, 0.5);
    }

    #[test]
    fn single_sample_yields_none() {
        let data =
            TreeDataset::from_cost_rows(vec![vec![0.0]], vec![vec![0.0, 1.0]]).unwrap();
        assert!(best_split(&data, &[0], Criterion::CostInfoGain).is_none());
    }

    #[test]
    fn tie_break_prefers_lower_feature_then_threshold() {
        // Both features separate the labels identically, so gains are
        // computed from identical stats and tie exactly.
        let data = TreeDataset::from_cost_rows(
            vec![vec![0.0, 10.0], vec![1.0, 11.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let s = best_split(&data, &[0, 1], Criterion::ErrorReduction).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn duplicate_feature_values_share_one_side() {
        // Feature value 0.0 appears twice; the only legal threshold sits
        // between the duplicates and the remaining value, never between
        // the two copies.
        let data = TreeDataset::from_cost_rows(
            vec![vec![0.0], vec![0.0], vec![1.0]],
            vec![vec![0.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        let s = best_split(&data, &[0, 1, 2], Criterion::ErrorReduction).unwrap();
        assert_eq!(s.threshold, 0.5);
        assert_eq!(s.gain, 1.0 / 3.0);
    }

    #[test]
    fn degradation_dataset_cost_reduction_vs_info_gain() {
        let data = TreeDataset::from_cost_rows(
            vec![vec![0.0], vec![1.0]],
            vec![vec![1.0, 2.0], vec![1.0, 9.0]],
        )
        .unwrap();
        assert!(best_split(&data, &[0, 1], Criterion::CostReduction).is_none());
        let s = best_split(&data, &[0, 1], Criterion::CostInfoGain).unwrap();
        assert_eq!(s.threshold, 0.5);
        assert!(s.gain > 0.0);
    }

    #[test]
    fn regression_split_separates_clusters() {
        let data = TreeDataset::new(
            vec![vec![0.0], vec![0.1], vec![5.0], vec![5.1]],
            vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0], vec![0.0, 3.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let s = best_split(&data, &[0, 1, 2, 3], Criterion::VarianceReduction).unwrap();
        assert_eq!(s.feature, 0);
        assert!((s.threshold - 2.55).abs() < 1e-12);
    }

    #[test]
    fn midpoint_fallback_separates_adjacent_floats() {
        let a = 1.0f64;
        let b = a.next_up();
        let t = midpoint_threshold(a, b);
        assert!(a <= t && t < b);
    }
}
