//! Dataset ingestion, feature scaling, splitting and summary statistics.
//!
//! Two on-disk formats are supported: a subset of ARFF covering the common
//! multi-label repository files (numeric and binary-nominal attributes,
//! dense and sparse rows) and a compact native sparse text format.

mod arff;
mod native;
pub mod synth;

pub use arff::{load_arff, parse_label_xml, LabelSpec};
pub use native::{load_native, save_native};

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::LabelVector;
use crate::error::{Error, Result};
use crate::kernels::Tensor;

/// A multi-label dataset: N feature rows and N label vectors of length K.
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Tensor,
    pub labels: Vec<LabelVector>,
    pub feature_names: Vec<String>,
    pub label_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Tensor,
        labels: Vec<LabelVector>,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::Size(format!(
                "dataset needs at least one example and one feature, got {n} x {d}"
            )));
        }
        if labels.len() != n {
            return Err(Error::dimension("Dataset::new labels", n, labels.len()));
        }
        let k = labels[0].len();
        if let Some(bad) = labels.iter().find(|l| l.len() != k) {
            return Err(Error::dimension("Dataset::new label length", k, bad.len()));
        }
        if feature_names.len() != d {
            return Err(Error::dimension(
                "Dataset::new feature names",
                d,
                feature_names.len(),
            ));
        }
        if label_names.len() != k {
            return Err(Error::dimension(
                "Dataset::new label names",
                k,
                label_names.len(),
            ));
        }
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("non-finite feature value {bad}")));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            feature_names,
            label_names,
        })
    }

    /// Convenience constructor with generated attribute names.
    pub fn with_default_names(
        name: impl Into<String>,
        features: Tensor,
        labels: Vec<LabelVector>,
    ) -> Result<Self> {
        let d = features.ncols();
        let k = labels.first().map(|l| l.len()).unwrap_or(0);
        let feature_names = (0..d).map(|i| format!("f{i}")).collect();
        let label_names = (0..k).map(|i| format!("label{i}")).collect();
        Dataset::new(name, features, labels, feature_names, label_names)
    }

    pub fn n_examples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.labels[0].len()
    }

    /// Labels as an N x K matrix of 0.0/1.0, the form the trainer consumes.
    pub fn label_matrix(&self) -> Tensor {
        let mut out = Tensor::zeros((self.n_examples(), self.n_labels()));
        for (i, lv) in self.labels.iter().enumerate() {
            for (j, &b) in lv.bits().iter().enumerate() {
                out[[i, j]] = b as f64;
            }
        }
        out
    }

    /// New dataset holding the given example indices, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if indices.is_empty() {
            return Err(Error::Size("subset needs at least one index".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_examples()) {
            return Err(Error::Size(format!(
                "subset index {bad} out of range 0..{}",
                self.n_examples()
            )));
        }
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i].clone()).collect();
        Dataset::new(
            self.name.clone(),
            features,
            labels,
            self.feature_names.clone(),
            self.label_names.clone(),
        )
    }

    pub fn stats(&self) -> DatasetStats {
        stats(self)
    }
}

/// Summary statistics in the style of multi-label dataset tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub n_examples: usize,
    pub n_features: usize,
    pub n_labels: usize,
    /// Mean number of relevant labels per example.
    pub cardinality: f64,
    /// Cardinality divided by the number of labels.
    pub density: f64,
}

pub fn stats(ds: &Dataset) -> DatasetStats {
    let total_ones: usize = ds.labels.iter().map(|l| l.count_ones()).sum();
    let cardinality = total_ones as f64 / ds.n_examples() as f64;
    DatasetStats {
        name: ds.name.clone(),
        n_examples: ds.n_examples(),
        n_features: ds.n_features(),
        n_labels: ds.n_labels(),
        cardinality,
        density: cardinality / ds.n_labels() as f64,
    }
}

/// Per-feature min-max parameters fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl ScalingParams {
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.n_features();
        let mut mins = vec![f64::INFINITY; d];
        let mut maxs = vec![f64::NEG_INFINITY; d];
        for row in ds.features.rows() {
            for (j, &v) in row.iter().enumerate() {
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        ScalingParams { mins, maxs }
    }

    /// Applies `(v - min) / (max - min)` per feature, clipping the result to
    /// [0, 1] so values outside the fitted range (possible on held-out data)
    /// stay in bounds. Constant features map to 0.
    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if self.mins.len() != ds.n_features() {
            return Err(Error::dimension(
                "ScalingParams::transform",
                self.mins.len(),
                ds.n_features(),
            ));
        }
        let mut features = ds.features.clone();
        for mut row in features.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                let range = self.maxs[j] - self.mins[j];
                *v = if range > 0.0 {
                    ((*v - self.mins[j]) / range).clamp(0.0, 1.0)
                } else {
                    0.0
                };
            }
        }
        Dataset::new(
            ds.name.clone(),
            features,
            ds.labels.clone(),
            ds.feature_names.clone(),
            ds.label_names.clone(),
        )
    }
}

/// Fits min-max parameters on `ds` and returns the transformed dataset along
/// with the parameters, so held-out data can be transformed with training
/// statistics.
pub fn scale_features(ds: &Dataset) -> Result<(Dataset, ScalingParams)> {
    let params = ScalingParams::fit(ds);
    let scaled = params.transform(ds)?;
    Ok((scaled, params))
}

/// A 75/25 train/test partition of example indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Uniformly random split with 75% of examples for training (rounded).
/// Deterministic for a fixed seed.
pub fn split(ds: &Dataset, seed: u64) -> Result<Split> {
    let n = ds.n_examples();
    if n < 4 {
        return Err(Error::Size(format!(
            "split needs at least 4 examples, got {n}"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = (0.75 * n as f64).round() as usize;
    let test_indices = indices.split_off(n_train);
    Ok(Split {
        train_indices: indices,
        test_indices,
        seed,
    })
}
