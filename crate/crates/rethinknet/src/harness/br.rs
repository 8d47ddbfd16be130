//! Independent-label baseline: a feed-forward network with one ReLU hidden
//! layer and sigmoid outputs, trained on unweighted cross-entropy with the
//! same optimizer and stopping protocol as the recurrent model. Useful as
//! the reference point that ignores label correlation and cost information.

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::costs::LabelVector;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{
    init, sigmoid, squared_norm, weighted_bce, weighted_bce_grad_logits, NadamParams, NadamState,
    Tensor,
};
use crate::model::{threshold_probs, TrainConfig};

#[derive(Debug, Clone)]
pub struct BrBaseline {
    pub hidden_dim: usize,
    pub l2_strength: f64,
    pub seed: u64,
    hidden_w: Tensor,
    hidden_b: Tensor,
    out_w: Tensor,
    out_b: Tensor,
    optimizer: NadamState,
    history: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BrBaseline {
    pub fn new(
        input_dim: usize,
        n_labels: usize,
        hidden_dim: usize,
        l2_strength: f64,
        seed: u64,
    ) -> Result<Self> {
        if input_dim == 0 || n_labels == 0 || hidden_dim == 0 {
            return Err(Error::Config("all baseline dimensions must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden_w = init::glorot_uniform(input_dim, hidden_dim, &mut rng);
        let out_w = init::glorot_uniform(hidden_dim, n_labels, &mut rng);
        Ok(BrBaseline {
            hidden_dim,
            l2_strength,
            seed,
            hidden_w,
            hidden_b: Tensor::zeros((1, hidden_dim)),
            out_w,
            out_b: Tensor::zeros((1, n_labels)),
            optimizer: NadamState::new(NadamParams::default()),
            history: Vec::new(),
            rng,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.hidden_w.len() + self.hidden_b.len() + self.out_w.len() + self.out_b.len()
    }

    pub fn history(&self) -> &[f64] {
        &self.history
    }

    fn forward(&self, x: &Tensor) -> (Tensor, Tensor) {
        let hidden = (x.dot(&self.hidden_w) + &self.hidden_b).mapv(|v| v.max(0.0));
        let probs = sigmoid(&(hidden.dot(&self.out_w) + &self.out_b));
        (hidden, probs)
    }

    pub fn predict_proba(&self, x: &Tensor) -> Result<Tensor> {
        if x.ncols() != self.hidden_w.nrows() {
            return Err(Error::dimension(
                "baseline input",
                self.hidden_w.nrows(),
                x.ncols(),
            ));
        }
        Ok(self.forward(x).1)
    }

    pub fn predict(&self, x: &Tensor) -> Result<Vec<LabelVector>> {
        Ok(threshold_probs(&self.predict_proba(x)?))
    }

    fn batch_loss_and_step(&mut self, x: &Tensor, y: &Tensor) -> Result<f64> {
        let (hidden, probs) = self.forward(x);
        let ones = Tensor::ones(y.dim());
        let mut loss = weighted_bce(&probs, y, &ones)?;
        loss += self.l2_strength * (squared_norm(&self.hidden_w) + squared_norm(&self.out_w));

        let ds = weighted_bce_grad_logits(&probs, y, &ones)?;
        let mut d_out_w = hidden.t().dot(&ds);
        let d_out_b = ds.sum_axis(Axis(0)).insert_axis(Axis(0));
        let d_hidden = ds.dot(&self.out_w.t()) * hidden.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
        let mut d_hidden_w = x.t().dot(&d_hidden);
        let d_hidden_b = d_hidden.sum_axis(Axis(0)).insert_axis(Axis(0));
        if self.l2_strength > 0.0 {
            d_hidden_w = d_hidden_w + &self.hidden_w * (2.0 * self.l2_strength);
            d_out_w = d_out_w + &self.out_w * (2.0 * self.l2_strength);
        }

        self.optimizer.step(
            &mut [
                &mut self.hidden_w,
                &mut self.hidden_b,
                &mut self.out_w,
                &mut self.out_b,
            ],
            &[&d_hidden_w, &d_hidden_b, &d_out_w, &d_out_b],
        )?;
        Ok(loss)
    }

    pub fn fit(&mut self, train: &Dataset, tc: &TrainConfig) -> Result<()> {
        tc.validate()?;
        let n = train.n_examples();
        let y_full = train.label_matrix();
        let mut order: Vec<usize> = (0..n).collect();
        let mut prev_loss: Option<f64> = None;
        let mut stale = 0usize;
        for epoch in 0..tc.max_epochs {
            order.shuffle(&mut self.rng);
            let mut epoch_loss = 0.0;
            for (batch_idx, batch) in order.chunks(tc.batch_size).enumerate() {
                let xb = train.features.select(Axis(0), batch);
                let yb = y_full.select(Axis(0), batch);
                let loss = self.batch_loss_and_step(&xb, &yb)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        batch: batch_idx,
                    });
                }
                epoch_loss += loss * batch.len() as f64;
            }
            let epoch_loss = epoch_loss / n as f64;
            self.history.push(epoch_loss);
            if let Some(prev) = prev_loss {
                let rel = (prev - epoch_loss) / prev.abs().max(1e-12);
                if rel < tc.min_delta {
                    stale += 1;
                } else {
                    stale = 0;
                }
                if stale >= tc.patience {
                    break;
                }
            }
            prev_loss = Some(epoch_loss);
        }
        Ok(())
    }

    /// Mean criterion value on a dataset (single-output model, so no
    /// per-iteration curve).
    pub fn evaluate(&self, ds: &Dataset, cost: crate::costs::CostKind) -> Result<f64> {
        let cost = crate::costs::CostFunction::new(cost);
        let predictions = self.predict(&ds.features)?;
        let mut total = 0.0;
        for (truth, pred) in ds.labels.iter().zip(&predictions) {
            total += cost.evaluate(truth, pred)?;
        }
        Ok(total / ds.n_examples() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::CostKind;
    use crate::data::synth;

    #[test]
    fn baseline_learns_the_sign_toy_problem() {
        let ds = synth::sign_labels(0, 64);
        let mut model = BrBaseline::new(2, 2, 16, 0.0, 1).unwrap();
        let tc = TrainConfig {
            max_epochs: 200,
            batch_size: 16,
            ..TrainConfig::default()
        };
        model.fit(&ds, &tc).unwrap();
        let hamming = model.evaluate(&ds, CostKind::Hamming).unwrap();
        assert!(hamming < 0.05, "training hamming {hamming}");
    }

    #[test]
    fn baseline_is_deterministic() {
        let ds = synth::linear_threshold(5, 32, 4, 3);
        let tc = TrainConfig {
            max_epochs: 10,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let run = || {
            let mut m = BrBaseline::new(4, 3, 8, 1e-4, 9).unwrap();
            m.fit(&ds, &tc).unwrap();
            m.predict_proba(&ds.features).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn baseline_never_touches_cost_weighting() {
        // Structural: the baseline type has no cost or reweighting knob; its
        // loss is plain cross-entropy. Fitting works without any criterion.
        let ds = synth::linear_threshold(6, 24, 3, 2);
        let mut model = BrBaseline::new(3, 2, 4, 0.0, 0).unwrap();
        model
            .fit(
                &ds,
                &TrainConfig {
                    max_epochs: 3,
                    batch_size: 8,
                    ..TrainConfig::default()
                },
            )
            .unwrap();
        assert_eq!(model.history().len(), 3);
    }
}
