//! Parameter initializers.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::Tensor;

/// Glorot/Xavier uniform: entries drawn from U(-l, l) with l = sqrt(6/(fan_in+fan_out)).
pub fn glorot_uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

pub fn identity_matrix(n: usize) -> Tensor {
    Array2::eye(n)
}

/// Random orthogonal n x n matrix via modified Gram-Schmidt on a Gaussian
/// matrix. Columns that become numerically degenerate are resampled.
pub fn orthogonal<R: Rng>(n: usize, rng: &mut R) -> Tensor {
    let mut q = Array2::zeros((n, n));
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        loop {
            // Remove projections onto the columns fixed so far.
            for prev in 0..j {
                let dot: f64 = (0..n).map(|i| col[i] * q[[i, prev]]).sum();
                for i in 0..n {
                    col[i] -= dot * q[[i, prev]];
                }
            }
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for i in 0..n {
                    q[[i, j]] = col[i] / norm;
                }
                break;
            }
            col = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn glorot_respects_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = glorot_uniform(20, 30, &mut rng);
        let limit = (6.0_f64 / 50.0).sqrt();
        assert!(t.iter().all(|&v| v.abs() <= limit));
    }

    #[test]
    fn orthogonal_columns_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = orthogonal(16, &mut rng);
        let qtq = q.t().dot(&q);
        for i in 0..16 {
            for j in 0..16 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (qtq[[i, j]] - want).abs() < 1e-10,
                    "Q^T Q [{i},{j}] = {}",
                    qtq[[i, j]]
                );
            }
        }
    }

    #[test]
    fn identity_is_identity() {
        let i = identity_matrix(3);
        assert_eq!(i[[0, 0]], 1.0);
        assert_eq!(i[[0, 1]], 0.0);
    }
}
