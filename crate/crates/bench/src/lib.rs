//! Input builders shared by the benchmarks.

use advtree_core::transfer::TransferSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Synthetic transfer samples shaped like CartPole data: 4 features, 2
/// actions, and a Q-gap that varies across the state space so splits
/// carry real signal instead of degenerating into ties.
pub fn synthetic_samples(n: usize, seed: u64) -> Vec<TransferSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let state: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let better = usize::from(state[0] + 0.3 * state[2] > 0.0);
            let gap = 0.1 + state[1].abs();
            let mut q = vec![0.0; 2];
            q[better] = gap;
            TransferSample::from_q(state, q).expect("finite Q-vector")
        })
        .collect()
}

/// A uniform point cloud offset by `shift`, standing in for the visited
/// states of one policy.
pub fn point_cloud(n: usize, dim: usize, shift: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0) + shift).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_samples_have_consistent_teacher_actions() {
        for s in synthetic_samples(50, 1) {
            assert_eq!(s.state.len(), 4);
            assert_eq!(s.q.len(), 2);
            assert!(s.q[s.teacher_action] >= s.q[1 - s.teacher_action]);
        }
    }

    #[test]
    fn point_cloud_is_seeded() {
        assert_eq!(point_cloud(5, 3, 0.5, 9), point_cloud(5, 3, 0.5, 9));
        assert_ne!(point_cloud(5, 3, 0.5, 9), point_cloud(5, 3, 0.5, 10));
    }
}
