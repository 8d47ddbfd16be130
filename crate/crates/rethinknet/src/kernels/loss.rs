//! Weighted binary cross-entropy over a batch of per-label probabilities.

use crate::error::{Error, Result};

use super::Tensor;

/// Probabilities are clamped to `[BCE_EPSILON, 1 - BCE_EPSILON]` before the
/// logarithms to keep the loss finite.
pub const BCE_EPSILON: f64 = 1e-7;

fn check_shapes(context: &'static str, p: &Tensor, y: &Tensor, w: &Tensor) -> Result<()> {
    if p.dim() != y.dim() || p.dim() != w.dim() {
        return Err(Error::dimension(
            context,
            format!("{:?}", p.dim()),
            format!("y {:?}, w {:?}", y.dim(), w.dim()),
        ));
    }
    Ok(())
}

#[inline]
fn clamp(p: f64) -> f64 {
    p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON)
}

/// Mean over examples of the per-label weighted cross-entropy,
/// `(1/N) Σ_n Σ_i -w[n,i] (y log p + (1-y) log(1-p))`.
pub fn weighted_bce(p: &Tensor, y: &Tensor, w: &Tensor) -> Result<f64> {
    check_shapes("weighted_bce", p, y, w)?;
    let n = p.nrows() as f64;
    let mut total = 0.0;
    for ((&pi, &yi), &wi) in p.iter().zip(y.iter()).zip(w.iter()) {
        let pc = clamp(pi);
        total -= wi * (yi * pc.ln() + (1.0 - yi) * (1.0 - pc).ln());
    }
    Ok(total / n)
}

/// Gradient of [`weighted_bce`] with respect to the probabilities.
/// Entries whose probability sits in a clamped region get gradient 0, which
/// is exactly what a finite-difference probe of the clamped loss sees.
pub fn weighted_bce_grad_probs(p: &Tensor, y: &Tensor, w: &Tensor) -> Result<Tensor> {
    check_shapes("weighted_bce_grad_probs", p, y, w)?;
    let n = p.nrows() as f64;
    let mut grad = Tensor::zeros(p.dim());
    for ((g, (&pi, &yi)), &wi) in grad.iter_mut().zip(p.iter().zip(y.iter())).zip(w.iter()) {
        if !(BCE_EPSILON..=1.0 - BCE_EPSILON).contains(&pi) {
            continue;
        }
        *g = wi * (-yi / pi + (1.0 - yi) / (1.0 - pi)) / n;
    }
    Ok(grad)
}

/// Gradient of [`weighted_bce`] with respect to the pre-sigmoid logits of
/// `p`, i.e. `(1/N) w (p - y)` on unclamped entries.
pub fn weighted_bce_grad_logits(p: &Tensor, y: &Tensor, w: &Tensor) -> Result<Tensor> {
    check_shapes("weighted_bce_grad_logits", p, y, w)?;
    let n = p.nrows() as f64;
    let mut grad = Tensor::zeros(p.dim());
    for ((g, (&pi, &yi)), &wi) in grad.iter_mut().zip(p.iter().zip(y.iter())).zip(w.iter()) {
        if !(BCE_EPSILON..=1.0 - BCE_EPSILON).contains(&pi) {
            continue;
        }
        *g = wi * (pi - yi) / n;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_weights_give_zero_loss() {
        let p = array![[0.3, 0.9], [0.5, 0.1]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let w = Tensor::zeros((2, 2));
        assert_eq!(weighted_bce(&p, &y, &w).unwrap(), 0.0);
        let g = weighted_bce_grad_logits(&p, &y, &w).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_case_is_ln_two() {
        let p = array![[0.5]];
        let y = array![[1.0]];
        let w = array![[1.0]];
        let loss = weighted_bce(&p, &y, &w).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn loss_is_linear_in_weights() {
        let p = array![[0.3, 0.9], [0.45, 0.2]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let w = array![[1.0, 0.5], [2.0, 0.25]];
        let base = weighted_bce(&p, &y, &w).unwrap();
        let scaled = weighted_bce(&p, &y, &(&w * 3.0)).unwrap();
        assert!((scaled - 3.0 * base).abs() < 1e-12);
    }

    #[test]
    fn grad_wrt_prob_matches_analytic_example() {
        let p = array![[0.5]];
        let y = array![[1.0]];
        let w = array![[1.0]];
        let g = weighted_bce_grad_probs(&p, &y, &w).unwrap();
        assert_eq!(g[[0, 0]], -2.0);
    }

    #[test]
    fn grad_matches_finite_differences() {
        let p = array![[0.3, 0.9], [0.45, 0.2]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let w = array![[1.0, 0.5], [2.0, 0.25]];
        let g = weighted_bce_grad_probs(&p, &y, &w).unwrap();
        let h = 1e-6;
        for r in 0..2 {
            for c in 0..2 {
                let mut plus = p.clone();
                plus[[r, c]] += h;
                let mut minus = p.clone();
                minus[[r, c]] -= h;
                let fd = (weighted_bce(&plus, &y, &w).unwrap()
                    - weighted_bce(&minus, &y, &w).unwrap())
                    / (2.0 * h);
                assert!(
                    (fd - g[[r, c]]).abs() < 1e-6,
                    "fd {fd} vs analytic {}",
                    g[[r, c]]
                );
            }
        }
    }

    #[test]
    fn unit_weights_equal_unweighted_bce() {
        let p = array![[0.3, 0.9], [0.45, 0.2]];
        let y = array![[1.0, 0.0], [0.0, 1.0]];
        let w = Tensor::ones((2, 2));
        let weighted = weighted_bce(&p, &y, &w).unwrap();
        // Hand-rolled unweighted BCE with the same clamping.
        let mut total = 0.0;
        for (&pi, &yi) in p.iter().zip(y.iter()) {
            total -= 1.0 * (yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln());
        }
        assert_eq!(weighted, total / 2.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let p = Tensor::zeros((2, 2));
        let y = Tensor::zeros((2, 3));
        let w = Tensor::zeros((2, 2));
        assert!(weighted_bce(&p, &y, &w).is_err());
    }
}
