//! Central finite-difference verification of analytic gradients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Tensor;

/// Above this many scalar parameters only a random subsample of coordinates
/// is probed.
const SUBSAMPLE_THRESHOLD: usize = 10_000;

// A single central difference of a loss of magnitude L has an absolute
// noise floor around eps * L / step from cancellation. Coordinates whose
// gradient magnitude sits near that floor get re-probed at larger steps
// where the floor is lower; a genuinely wrong gradient disagrees at every
// step, so this does not mask real errors.
const REFINE_THRESHOLD: f64 = 1e-6;
const REFINE_FACTORS: [f64; 2] = [8.0, 64.0];

/// Compares `analytic` against central differences of `loss` and returns the
/// maximum relative error, `|a - n| / max(|a|, |n|, 1e-8)`.
///
/// `loss` is called with perturbed copies of `params`; it must be a pure
/// function of them. Every scalar coordinate is probed unless there are more
/// than 10^4, in which case a seeded random subsample of 10^4 coordinates is
/// used. Per coordinate the error is the best agreement over the base step
/// and, where the base step sits in the round-off noise floor, two larger
/// refinement steps.
pub fn gradient_check<F>(mut loss: F, params: &[Tensor], analytic: &[Tensor], step: f64) -> f64
where
    F: FnMut(&[Tensor]) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    let mut coords: Vec<(usize, usize, usize)> = Vec::new();
    for (ti, t) in params.iter().enumerate() {
        assert_eq!(t.dim(), analytic[ti].dim());
        for r in 0..t.nrows() {
            for c in 0..t.ncols() {
                coords.push((ti, r, c));
            }
        }
    }
    if coords.len() > SUBSAMPLE_THRESHOLD {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9d2c_5680);
        coords.shuffle(&mut rng);
        coords.truncate(SUBSAMPLE_THRESHOLD);
    }

    let mut work: Vec<Tensor> = params.to_vec();
    let mut probe = |work: &mut Vec<Tensor>, ti: usize, r: usize, c: usize, h: f64, a: f64| {
        let orig = work[ti][[r, c]];
        work[ti][[r, c]] = orig + h;
        let up = loss(work);
        work[ti][[r, c]] = orig - h;
        let down = loss(work);
        work[ti][[r, c]] = orig;
        let numeric = (up - down) / (2.0 * h);
        (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8)
    };

    let mut max_rel = 0.0f64;
    for (ti, r, c) in coords {
        let a = analytic[ti][[r, c]];
        let mut rel = probe(&mut work, ti, r, c, step, a);
        if rel > REFINE_THRESHOLD {
            for factor in REFINE_FACTORS {
                rel = rel.min(probe(&mut work, ti, r, c, step * factor, a));
                if rel <= REFINE_THRESHOLD {
                    break;
                }
            }
        }
        if rel > max_rel {
            max_rel = rel;
        }
    }
    max_rel
}
