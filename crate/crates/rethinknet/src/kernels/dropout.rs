//! Weight dropout for the recurrent transformation.

use rand::Rng;

use crate::error::{Error, Result};

use super::Tensor;

/// Inverted-scaling dropout mask for a recurrent weight matrix.
///
/// Entries are 1/(1-rate) with probability 1-rate and 0 otherwise, so the
/// expected value of every entry is 1 and evaluation can use the unmasked
/// matrix as-is. The mask is applied to weights (DropConnect style), not to
/// activations, and only during training.
pub fn recurrent_dropout_mask<R: Rng>(
    shape: (usize, usize),
    rate: f64,
    rng: &mut R,
) -> Result<Tensor> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    Ok(Tensor::from_shape_fn(shape, |_| {
        if rng.gen::<f64>() < keep {
            scale
        } else {
            0.0
        }
    }))
}
