//! Seeded synthetic dataset generators. Used by tests and by the correlation
//! analysis checks; features are already in [0, 1].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::costs::LabelVector;
use crate::kernels::Tensor;

use super::Dataset;

/// Labels are thresholded random linear functions of the features, so they
/// are learnable and mildly correlated through the shared input.
pub fn linear_threshold(seed: u64, n: usize, d: usize, k: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = Tensor::from_shape_fn((n, d), |_| rng.gen::<f64>());
    let weights = Tensor::from_shape_fn((d, k), |_| rng.gen_range(-1.0..1.0));
    let scores = features.dot(&weights);
    // Per-label threshold at the column median keeps labels roughly balanced.
    let mut labels = Vec::with_capacity(n);
    let thresholds: Vec<f64> = (0..k)
        .map(|j| {
            let mut col: Vec<f64> = scores.column(j).to_vec();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            col[n / 2]
        })
        .collect();
    for i in 0..n {
        let bits = (0..k)
            .map(|j| (scores[[i, j]] > thresholds[j]) as u8)
            .collect();
        labels.push(LabelVector::new(bits).unwrap());
    }
    Dataset::with_default_names(format!("synth-linear-{seed}"), features, labels).unwrap()
}

/// Three labels: label 0 is a learnable threshold function, label 1 is an
/// exact duplicate of label 0 and label 2 is independent coin-flip noise.
pub fn duplicated_label(seed: u64, n: usize, d: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = Tensor::from_shape_fn((n, d), |_| rng.gen::<f64>());
    let weights: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let scores: Vec<f64> = features
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&weights).map(|(x, w)| x * w).sum())
        .collect();
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let threshold = sorted[n / 2];
    let labels = scores
        .iter()
        .map(|&s| {
            let base = (s > threshold) as u8;
            let noise = rng.gen_range(0..=1u8);
            LabelVector::new(vec![base, base, noise]).unwrap()
        })
        .collect();
    Dataset::with_default_names(format!("synth-dup-{seed}"), features, labels).unwrap()
}

/// Each label depends on its own disjoint block of features, so label
/// correlations are close to zero by construction.
pub fn independent_labels(seed: u64, n: usize, k: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = 3usize;
    let d = k * block;
    let features = Tensor::from_shape_fn((n, d), |_| rng.gen::<f64>());
    let labels = (0..n)
        .map(|i| {
            let bits = (0..k)
                .map(|j| {
                    let sum: f64 = (0..block).map(|b| features[[i, j * block + b]]).sum();
                    (sum > block as f64 / 2.0) as u8
                })
                .collect();
            LabelVector::new(bits).unwrap()
        })
        .collect();
    Dataset::with_default_names(format!("synth-indep-{seed}"), features, labels).unwrap()
}

/// Tiny two-label set where each label is the sign of one feature; a sanity
/// target any working trainer must fit almost perfectly.
pub fn sign_labels(seed: u64, n: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = Tensor::from_shape_fn((n, 2), |_| rng.gen::<f64>());
    let labels = features
        .rows()
        .into_iter()
        .map(|row| LabelVector::new(vec![(row[0] > 0.5) as u8, (row[1] > 0.5) as u8]).unwrap())
        .collect();
    Dataset::with_default_names(format!("synth-sign-{seed}"), features, labels).unwrap()
}
