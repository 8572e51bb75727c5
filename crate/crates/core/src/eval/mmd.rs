//! Multi-kernel maximum mean discrepancy between two point sets.
//!
//! The estimator is deliberately arranged so that two properties hold
//! bitwise, not just approximately:
//!
//! - `mmd(x, y) == mmd(y, x)`: every Gram-block mean is accumulated as
//!   (sum of row sums + sum of column sums) / 2, which is literally the
//!   same additions in the swapped call; standardization moments combine
//!   one per-set sum per side before dividing.
//! - `mmd(x, x) == 0`: the three block means then run over identical
//!   values, and `a + a - 2a` cancels exactly.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// V-statistic; nonnegative, zero on identical sets.
    Biased,
    /// U-statistic; excludes self-pairs, can go negative on close sets.
    Unbiased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmdConfig {
    /// Gaussian bandwidths as multiples of the median pairwise distance.
    pub multipliers: Vec<f64>,
    /// Cap on points per side (used by rollout-based callers).
    pub m: usize,
    pub estimator: Estimator,
}

impl Default for MmdConfig {
    fn default() -> MmdConfig {
        MmdConfig {
            multipliers: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            m: 2000,
            estimator: Estimator::Biased,
        }
    }
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    /// Moments of the pooled sets, combined per-set so the result is
    /// symmetric in the arguments. Dimensions with (near-)zero spread get
    /// scale 1 to keep distances finite.
    fn fit(x: &[Vec<f64>], y: &[Vec<f64>]) -> Standardizer {
        let d = x[0].len();
        let n = (x.len() + y.len()) as f64;
        let per_set = |set: &[Vec<f64>]| -> (Vec<f64>, Vec<f64>) {
            let mut sum = vec![0.0; d];
            let mut sq = vec![0.0; d];
            for p in set {
                for j in 0..d {
                    sum[j] += p[j];
                    sq[j] += p[j] * p[j];
                }
            }
            (sum, sq)
        };
        let (sx, qx) = per_set(x);
        let (sy, qy) = per_set(y);
        let mut mean = vec![0.0; d];
        let mut scale = vec![1.0; d];
        for j in 0..d {
            mean[j] = (sx[j] + sy[j]) / n;
            let var = ((qx[j] + qy[j]) / n - mean[j] * mean[j]).max(0.0);
            let std = var.sqrt();
            if std > 1e-12 {
                scale[j] = std;
            }
        }
        Standardizer { mean, scale }
    }

    fn apply(&self, set: &[Vec<f64>]) -> Vec<Vec<f64>> {
        set.iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(j, v)| (v - self.mean[j]) / self.scale[j])
                    .collect()
            })
            .collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..a.len() {
        let d = a[j] - b[j];
        s += d * d;
    }
    s
}

/// Median pairwise distance over the pooled points (upper median). The
/// pair multiset is argument-order independent after sorting.
fn median_pairwise_distance(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&Vec<f64>> = x.iter().chain(y.iter()).collect();
    let mut dists = Vec::with_capacity(pooled.len() * (pooled.len() - 1) / 2);
    for i in 0..pooled.len() {
        for j in (i + 1)..pooled.len() {
            dists.push(sq_dist(pooled[i], pooled[j]).sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    let mid = dists.len() / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *median;
    if m > 1e-12 {
        m
    } else {
        1.0
    }
}

/// Mixture kernel: average of Gaussians at each bandwidth.
fn kernel(d2: f64, bandwidths: &[f64]) -> f64 {
    let mut k = 0.0;
    for b in bandwidths {
        k += (-d2 / (2.0 * b * b)).exp();
    }
    k / bandwidths.len() as f64
}

/// Mean of the kernel Gram block between `a` and `b`, accumulated
/// symmetrically: (sum over rows of row sums + sum over columns of column
/// sums) / 2, divided by the block size. `skip_diagonal` implements the
/// U-statistic for self blocks (then divides by n(n-1)).
fn block_mean(a: &[Vec<f64>], b: &[Vec<f64>], bw: &[f64], skip_diagonal: bool) -> f64 {
    let mut row_total = 0.0;
    for (i, pa) in a.iter().enumerate() {
        let mut row = 0.0;
        for (j, pb) in b.iter().enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            row += kernel(sq_dist(pa, pb), bw);
        }
        row_total += row;
    }
    let mut col_total = 0.0;
    for (j, pb) in b.iter().enumerate() {
        let mut col = 0.0;
        for (i, pa) in a.iter().enumerate() {
            if skip_diagonal && i == j {
                continue;
            }
            col += kernel(sq_dist(pa, pb), bw);
        }
        col_total += col;
    }
    let pairs = if skip_diagonal {
        debug_assert_eq!(a.len(), b.len());
        (a.len() * (a.len() - 1)) as f64
    } else {
        (a.len() * b.len()) as f64
    };
    (row_total + col_total) / 2.0 / pairs
}

/// Maximum mean discrepancy between the two point sets under the config's
/// Gaussian mixture kernel, after standardizing all points by the pooled
/// per-dimension mean and standard deviation. Returns
/// `sqrt(max(MMD^2, 0))`.
pub fn mmd(x: &[Vec<f64>], y: &[Vec<f64>], cfg: &MmdConfig) -> Result<f64> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::contract(format!(
            "mmd needs at least 2 points per side, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if d == 0
        || x.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite()))
        || y.iter().any(|p| p.len() != d || p.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::contract("mmd points must be finite and of equal dimension"));
    }
    if cfg.multipliers.is_empty() || cfg.multipliers.iter().any(|m| !(m > &0.0)) {
        return Err(Error::contract("bandwidth multipliers must be positive"));
    }

    let std = Standardizer::fit(x, y);
    let xs = std.apply(x);
    let ys = std.apply(y);

    let median = median_pairwise_distance(&xs, &ys);
    let bandwidths: Vec<f64> = cfg.multipliers.iter().map(|m| m * median).collect();

    let skip = cfg.estimator == Estimator::Unbiased;
    let kxx = block_mean(&xs, &xs, &bandwidths, skip);
    let kyy = block_mean(&ys, &ys, &bandwidths, skip);
    let kxy = block_mean(&xs, &ys, &bandwidths, false);

    let mmd2 = kxx + kyy - 2.0 * kxy;
    Ok(mmd2.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, center: &[f64], spread: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                center
                    .iter()
                    .map(|c| c + spread * (rng.gen::<f64>() * 2.0 - 1.0))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_sets_give_exact_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = cloud(&mut rng, 40, &[0.0, 1.0, -2.0], 1.0);
        let v = mmd(&x, &x, &MmdConfig::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn symmetry_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = cloud(&mut rng, 35, &[0.0, 0.0], 1.0);
        let y = cloud(&mut rng, 50, &[0.5, -0.25], 1.5);
        let cfg = MmdConfig::default();
        let a = mmd(&x, &y, &cfg).unwrap();
        let b = mmd(&y, &x, &cfg).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.0);
    }

    #[test]
    fn separated_clouds_score_higher_than_overlapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = cloud(&mut rng, 60, &[0.0, 0.0], 1.0);
        let near = cloud(&mut rng, 60, &[0.1, 0.0], 1.0);
        let far = cloud(&mut rng, 60, &[4.0, 4.0], 1.0);
        let cfg = MmdConfig::default();
        let close = mmd(&x, &near, &cfg).unwrap();
        let apart = mmd(&x, &far, &cfg).unwrap();
        assert!(apart > close, "{apart} vs {close}");
        assert!(apart > 0.5);
    }

    #[test]
    fn permutation_invariant_within_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = cloud(&mut rng, 20, &[0.0], 1.0);
        let y = cloud(&mut rng, 20, &[1.0], 1.0);
        let mut x_perm = x.clone();
        x_perm.reverse();
        let cfg = MmdConfig::default();
        let a = mmd(&x, &y, &cfg).unwrap();
        let b = mmd(&x_perm, &y, &cfg).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn single_bandwidth_equals_repeated_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = cloud(&mut rng, 25, &[0.0, 0.0], 1.0);
        let y = cloud(&mut rng, 25, &[1.0, 1.0], 1.0);
        let single = MmdConfig { multipliers: vec![1.0], ..MmdConfig::default() };
        let repeated = MmdConfig { multipliers: vec![1.0; 5], ..MmdConfig::default() };
        let a = mmd(&x, &y, &single).unwrap();
        let b = mmd(&x, &y, &repeated).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn unbiased_estimator_runs_and_orders_like_biased() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = cloud(&mut rng, 30, &[0.0], 1.0);
        let y = cloud(&mut rng, 30, &[3.0], 1.0);
        let cfg = MmdConfig { estimator: Estimator::Unbiased, ..MmdConfig::default() };
        let v = mmd(&x, &y, &cfg).unwrap();
        assert!(v > 0.3, "{v}");
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let p = vec![vec![0.0, 1.0]];
        let q = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(mmd(&p, &q, &MmdConfig::default()).is_err());
        let ragged = vec![vec![0.0], vec![0.0, 1.0]];
        assert!(mmd(&ragged, &q, &MmdConfig::default()).is_err());
        let bad_cfg = MmdConfig { multipliers: vec![], ..MmdConfig::default() };
        assert!(mmd(&q, &q, &bad_cfg).is_err());
    }

    #[test]
    fn constant_dimension_does_not_poison_distances() {
        // Second dimension identical everywhere: scale falls back to 1.
        let x = vec![vec![0.0, 5.0], vec![1.0, 5.0], vec![2.0, 5.0]];
        let y = vec![vec![10.0, 5.0], vec![11.0, 5.0], vec![12.0, 5.0]];
        let v = mmd(&x, &y, &MmdConfig::default()).unwrap();
        assert!(v.is_finite());
        assert!(v > 0.0);
    }
}
