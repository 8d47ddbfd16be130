//! The rethinking network: one recurrent cell and one dense sigmoid head,
//! both shared across B unrolled iterations that all see the same feature
//! vector. Iteration 1 predicts from the features alone; later iterations
//! also see the previous hidden state, and the final iteration's output is
//! the prediction.
//!
//! Training minimizes the sum over iterations of a weighted binary
//! cross-entropy plus an L2 penalty on the weight matrices. The per-label
//! weights of iterations t >= 2 are the cost-difference importances computed
//! from the binarized previous-iteration predictions of the same forward
//! pass; no gradient flows through them.

mod serialize;

pub use serialize::ModelFile;

use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{
    label_importance_weights_with, CostFunction, CostKind, LabelVector, WeightNorm,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{
    init, recurrent_dropout_mask, sigmoid, squared_norm, weighted_bce, weighted_bce_grad_logits,
    CellGrads, CellKind, CellParams, CellState, NadamParams, NadamState, StepCache, Tensor,
};

/// Architecture and regularization choices, fixed at model construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub cell: CellKind,
    pub hidden_dim: usize,
    /// Number of rethink iterations B.
    pub rethink_iterations: usize,
    /// DropConnect rate on the recurrent weight matrices during training.
    pub recurrent_dropout: f64,
    pub l2_strength: f64,
    /// The evaluation criterion the loss reweighting targets.
    pub cost: CostKind,
    /// When false, every label weighs 1 at every iteration.
    pub reweighted: bool,
    pub seed: u64,
    /// How raw cost-difference weights are rescaled.
    #[serde(default)]
    pub weight_norm: WeightNorm,
}

impl ModelConfig {
    pub fn new(cell: CellKind, cost: CostKind) -> Self {
        ModelConfig {
            cell,
            hidden_dim: 128,
            rethink_iterations: 3,
            recurrent_dropout: 0.25,
            l2_strength: 0.0,
            cost,
            reweighted: true,
            seed: 0,
            weight_norm: WeightNorm::MeanOne,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be >= 1".into()));
        }
        if self.rethink_iterations == 0 {
            return Err(Error::Config("rethink_iterations must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.recurrent_dropout) {
            return Err(Error::Config(format!(
                "recurrent_dropout must lie in [0, 1), got {}",
                self.recurrent_dropout
            )));
        }
        if self.l2_strength < 0.0 {
            return Err(Error::Config("l2_strength must be >= 0".into()));
        }
        Ok(())
    }
}

/// Stopping rules for [`RethinkNetModel::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Stop after this many consecutive epochs whose relative loss
    /// improvement is below `min_delta`.
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 1000,
            batch_size: 256,
            patience: 10,
            min_delta: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "max_epochs and batch_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mean criterion values on a dataset, one per rethink iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub per_iteration: Vec<f64>,
    /// The value at the final iteration, the model's headline number.
    pub final_value: f64,
}

/// Normalized recurrent transformation of a label-sized simple cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryMatrix {
    /// Row i divided by its diagonal entry (where that is well-defined).
    pub normalized: Vec<Vec<f64>>,
    /// Rows whose diagonal magnitude was below 1e-8 and were left unnormalized.
    pub unnormalized_rows: Vec<usize>,
}

impl MemoryMatrix {
    pub fn to_tensor(&self) -> Tensor {
        let k = self.normalized.len();
        Tensor::from_shape_fn((k, k), |(i, j)| self.normalized[i][j])
    }
}

struct ForwardTrace {
    caches: Vec<StepCache>,
    hiddens: Vec<Tensor>,
    probs: Vec<Tensor>,
}

struct LossComputation {
    loss: f64,
    trace: ForwardTrace,
    weights: Vec<Tensor>,
}

/// The unrolled rethinking model plus its optimizer state and history.
#[derive(Debug, Clone)]
pub struct RethinkNetModel {
    pub config: ModelConfig,
    input_dim: usize,
    n_labels: usize,
    cell: CellParams,
    dense_w: Tensor,
    dense_b: Tensor,
    pub optimizer: NadamState,
    history: Vec<f64>,
    batch_losses: Vec<f64>,
    rng: ChaCha8Rng,
}

impl RethinkNetModel {
    pub fn new(config: ModelConfig, input_dim: usize, n_labels: usize) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 || n_labels == 0 {
            return Err(Error::Config(
                "input_dim and n_labels must be >= 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let cell = CellParams::init(config.cell, input_dim, config.hidden_dim, &mut rng);
        let dense_w = init::glorot_uniform(config.hidden_dim, n_labels, &mut rng);
        let dense_b = Tensor::zeros((1, n_labels));
        Ok(RethinkNetModel {
            config,
            input_dim,
            n_labels,
            cell,
            dense_w,
            dense_b,
            optimizer: NadamState::new(NadamParams::default()),
            history: Vec::new(),
            batch_losses: Vec::new(),
            rng,
        })
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        input_dim: usize,
        n_labels: usize,
        cell: CellParams,
        dense_w: Tensor,
        dense_b: Tensor,
        history: Vec<f64>,
    ) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        RethinkNetModel {
            config,
            input_dim,
            n_labels,
            cell,
            dense_w,
            dense_b,
            optimizer: NadamState::new(NadamParams::default()),
            history,
            batch_losses: Vec::new(),
            rng,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_labels(&self) -> usize {
        self.n_labels
    }

    pub fn cell_params(&self) -> &CellParams {
        &self.cell
    }

    pub fn dense_params(&self) -> (&Tensor, &Tensor) {
        (&self.dense_w, &self.dense_b)
    }

    /// Mean training loss per epoch, appended across `fit` calls.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Loss of every processed mini-batch, in order.
    pub fn batch_losses(&self) -> &[f64] {
        &self.batch_losses
    }

    /// Total number of trainable scalars. Independent of the number of
    /// rethink iterations because all iterations share the same parameters.
    pub fn parameter_count(&self) -> usize {
        self.cell.parameter_count() + self.dense_w.len() + self.dense_b.len()
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.ncols() != self.input_dim {
            return Err(Error::dimension("forward input", self.input_dim, x.ncols()));
        }
        Ok(())
    }

    fn run_forward(&self, x: &Tensor, masks: Option<&[Tensor]>) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let effective = match masks {
            Some(m) => self.cell.with_masked_recurrent(m)?,
            None => self.cell.clone(),
        };
        let b = self.config.rethink_iterations;
        let mut state = CellState::zeros(self.config.cell, x.nrows(), self.config.hidden_dim);
        let mut caches = Vec::with_capacity(b);
        let mut hiddens = Vec::with_capacity(b);
        let mut probs = Vec::with_capacity(b);
        for _ in 0..b {
            let (next, cache) = effective.step(x, &state)?;
            let p = sigmoid(&(next.hidden.dot(&self.dense_w) + &self.dense_b));
            caches.push(cache);
            hiddens.push(next.hidden.clone());
            probs.push(p);
            state = next;
        }
        Ok(ForwardTrace {
            caches,
            hiddens,
            probs,
        })
    }

    fn sample_masks(&mut self) -> Result<Option<Vec<Tensor>>> {
        if self.config.recurrent_dropout == 0.0 {
            return Ok(None);
        }
        let h = self.config.hidden_dim;
        let masks = (0..self.config.cell.gates())
            .map(|_| recurrent_dropout_mask((h, h), self.config.recurrent_dropout, &mut self.rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(masks))
    }

    /// Per-iteration label probabilities. In training mode fresh dropout
    /// masks are drawn; in evaluation mode the pass is deterministic.
    pub fn forward(&mut self, x: &Tensor, training: bool) -> Result<Vec<Tensor>> {
        if training {
            let masks = self.sample_masks()?;
            Ok(self.run_forward(x, masks.as_deref())?.probs)
        } else {
            self.predict_proba(x)
        }
    }

    /// Evaluation-mode probabilities for every rethink iteration.
    pub fn predict_proba(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        Ok(self.run_forward(x, None)?.probs)
    }

    /// Final-iteration predictions, thresholded at 0.5 (>= 0.5 maps to 1).
    pub fn predict(&self, x: &Tensor) -> Result<Vec<LabelVector>> {
        let probs = self.predict_proba(x)?;
        let last = probs.last().expect("B >= 1");
        Ok(threshold_probs(last))
    }

    fn importance_weights(&self, y: &Tensor, prev_probs: &Tensor) -> Result<Tensor> {
        let cost = CostFunction::new(self.config.cost);
        let (n, k) = y.dim();
        let mut w = Tensor::zeros((n, k));
        for i in 0..n {
            let truth = LabelVector::new(y.row(i).iter().map(|&v| v as u8).collect())?;
            let prev = LabelVector::from_bools(
                &prev_probs.row(i).iter().map(|&p| p >= 0.5).collect::<Vec<_>>(),
            );
            let weights =
                label_importance_weights_with(&truth, Some(&prev), cost, self.config.weight_norm)?;
            for (j, &v) in weights.values.iter().enumerate() {
                w[[i, j]] = v;
            }
        }
        Ok(w)
    }

    fn l2_penalty(&self) -> f64 {
        if self.config.l2_strength == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        for t in self.cell.input_w.iter().chain(self.cell.recurrent_w.iter()) {
            total += squared_norm(t);
        }
        total += squared_norm(&self.dense_w);
        self.config.l2_strength * total
    }

    fn loss_with_masks(
        &self,
        x: &Tensor,
        y: &Tensor,
        masks: Option<&[Tensor]>,
    ) -> Result<LossComputation> {
        if y.dim() != (x.nrows(), self.n_labels) {
            return Err(Error::dimension(
                "training_loss labels",
                format!("({}, {})", x.nrows(), self.n_labels),
                format!("{:?}", y.dim()),
            ));
        }
        let trace = self.run_forward(x, masks)?;
        let b = self.config.rethink_iterations;
        let ones = Tensor::ones(y.dim());
        let mut weights = Vec::with_capacity(b);
        let mut loss = 0.0;
        for t in 0..b {
            let w = if t == 0 || !self.config.reweighted {
                ones.clone()
            } else {
                self.importance_weights(y, &trace.probs[t - 1])?
            };
            loss += weighted_bce(&trace.probs[t], y, &w)?;
            weights.push(w);
        }
        loss += self.l2_penalty();
        Ok(LossComputation {
            loss,
            trace,
            weights,
        })
    }

    /// Training-mode loss of one batch: the summed per-iteration weighted
    /// cross-entropy plus the L2 penalty, along with the weight tensors that
    /// were applied at each iteration.
    pub fn training_loss(&mut self, x: &Tensor, y: &Tensor) -> Result<(f64, Vec<Tensor>)> {
        let masks = self.sample_masks()?;
        let comp = self.loss_with_masks(x, y, masks.as_deref())?;
        Ok((comp.loss, comp.weights))
    }

    fn backward(
        &self,
        x: &Tensor,
        y: &Tensor,
        comp: &LossComputation,
        masks: Option<&[Tensor]>,
    ) -> Result<(CellGrads, Tensor, Tensor)> {
        let effective = match masks {
            Some(m) => self.cell.with_masked_recurrent(m)?,
            None => self.cell.clone(),
        };
        let b = self.config.rethink_iterations;
        let mut cell_grads = CellGrads::zeros(&self.cell);
        let mut d_dense_w = Tensor::zeros(self.dense_w.dim());
        let mut d_dense_b = Tensor::zeros(self.dense_b.dim());

        // Importance weights are constants: the sole gradient paths are the
        // dense head at each iteration and the recurrent chain.
        let mut carry: Option<CellState> = None;
        for t in (0..b).rev() {
            let ds = weighted_bce_grad_logits(&comp.trace.probs[t], y, &comp.weights[t])?;
            d_dense_w = d_dense_w + comp.trace.hiddens[t].t().dot(&ds);
            d_dense_b = d_dense_b + ds.sum_axis(Axis(0)).insert_axis(Axis(0));
            let mut d_state = CellState {
                hidden: ds.dot(&self.dense_w.t()),
                cell: None,
            };
            if let Some(c) = carry {
                d_state.hidden = d_state.hidden + c.hidden;
                d_state.cell = c.cell;
            }
            carry = Some(effective.backward_step(x, &comp.trace.caches[t], &d_state, &mut cell_grads));
        }

        // Forward used masked recurrent matrices, so the chain rule back to
        // the raw parameters multiplies by the mask once more.
        if let Some(m) = masks {
            cell_grads.apply_recurrent_masks(m);
        }

        if self.config.l2_strength > 0.0 {
            let c = 2.0 * self.config.l2_strength;
            for (g, w) in cell_grads.input_w.iter_mut().zip(&self.cell.input_w) {
                *g = &*g + &(w * c);
            }
            for (g, w) in cell_grads.recurrent_w.iter_mut().zip(&self.cell.recurrent_w) {
                *g = &*g + &(w * c);
            }
            d_dense_w = d_dense_w + &self.dense_w * c;
        }
        Ok((cell_grads, d_dense_w, d_dense_b))
    }

    /// All trainable tensors, cloned, in the fixed order used by
    /// [`Self::compute_gradients`] and [`Self::set_flat_params`].
    pub fn flat_params(&self) -> Vec<Tensor> {
        let mut out: Vec<Tensor> = self.cell.tensors().into_iter().cloned().collect();
        out.push(self.dense_w.clone());
        out.push(self.dense_b.clone());
        out
    }

    pub fn set_flat_params(&mut self, params: &[Tensor]) -> Result<()> {
        let expected = self.cell.tensors().len() + 2;
        if params.len() != expected {
            return Err(Error::dimension("set_flat_params", expected, params.len()));
        }
        for (dst, src) in self.cell.tensors_mut().into_iter().zip(params) {
            if dst.dim() != src.dim() {
                return Err(Error::dimension(
                    "set_flat_params tensor",
                    format!("{:?}", dst.dim()),
                    format!("{:?}", src.dim()),
                ));
            }
            *dst = src.clone();
        }
        self.dense_w = params[params.len() - 2].clone();
        self.dense_b = params[params.len() - 1].clone();
        Ok(())
    }

    /// Loss and its gradient with respect to [`Self::flat_params`], computed
    /// with the given fixed dropout masks. The pair feeds the
    /// finite-difference gradient checker.
    pub fn compute_gradients(
        &self,
        x: &Tensor,
        y: &Tensor,
        masks: Option<&[Tensor]>,
    ) -> Result<(f64, Vec<Tensor>)> {
        let comp = self.loss_with_masks(x, y, masks)?;
        let (cell_grads, d_dense_w, d_dense_b) = self.backward(x, y, &comp, masks)?;
        let mut flat: Vec<Tensor> = cell_grads.tensors().into_iter().cloned().collect();
        flat.push(d_dense_w);
        flat.push(d_dense_b);
        Ok((comp.loss, flat))
    }

    /// Evaluation-mode loss of one batch under fixed dropout masks; pure in
    /// the parameters, for use in gradient-check closures.
    pub fn loss_value(&self, x: &Tensor, y: &Tensor, masks: Option<&[Tensor]>) -> Result<f64> {
        Ok(self.loss_with_masks(x, y, masks)?.loss)
    }

    /// Mini-batch training with early stopping.
    ///
    /// Batches are reshuffled every epoch; stopping occurs at `max_epochs`
    /// or after `patience` consecutive epochs whose relative training-loss
    /// improvement is below `min_delta`. Deterministic for a fixed seed.
    pub fn fit(&mut self, train: &Dataset, tc: &TrainConfig) -> Result<()> {
        tc.validate()?;
        if train.n_labels() != self.n_labels {
            return Err(Error::dimension(
                "fit labels",
                self.n_labels,
                train.n_labels(),
            ));
        }
        self.check_input(&train.features)?;
        let n = train.n_examples();
        let y_full = train.label_matrix();
        let mut order: Vec<usize> = (0..n).collect();
        let mut prev_loss: Option<f64> = None;
        let mut stale_epochs = 0usize;

        for epoch in 0..tc.max_epochs {
            use rand::seq::SliceRandom;
            order.shuffle(&mut self.rng);
            let mut epoch_loss = 0.0;
            for (batch_idx, batch) in order.chunks(tc.batch_size).enumerate() {
                let xb = train.features.select(Axis(0), batch);
                let yb = y_full.select(Axis(0), batch);
                let masks = self.sample_masks()?;
                let comp = self.loss_with_masks(&xb, &yb, masks.as_deref())?;
                if !comp.loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        batch: batch_idx,
                    });
                }
                let (cell_grads, d_dense_w, d_dense_b) =
                    self.backward(&xb, &yb, &comp, masks.as_deref())?;
                self.batch_losses.push(comp.loss);
                epoch_loss += comp.loss * batch.len() as f64;

                let RethinkNetModel {
                    cell,
                    dense_w,
                    dense_b,
                    optimizer,
                    ..
                } = self;
                let mut params = cell.tensors_mut();
                params.push(dense_w);
                params.push(dense_b);
                let mut grads: Vec<&Tensor> = cell_grads.tensors();
                grads.push(&d_dense_w);
                grads.push(&d_dense_b);
                optimizer.step(&mut params, &grads)?;
            }
            let epoch_loss = epoch_loss / n as f64;
            self.history.push(epoch_loss);

            if let Some(prev) = prev_loss {
                let rel_improvement = (prev - epoch_loss) / prev.abs().max(1e-12);
                if rel_improvement < tc.min_delta {
                    stale_epochs += 1;
                } else {
                    stale_epochs = 0;
                }
                if stale_epochs >= tc.patience {
                    break;
                }
            }
            prev_loss = Some(epoch_loss);
        }
        Ok(())
    }

    /// Mean criterion value on `test` at every rethink iteration; the final
    /// iteration's value is the headline number.
    pub fn evaluate(&self, test: &Dataset, cost: CostKind) -> Result<Evaluation> {
        if test.n_labels() != self.n_labels {
            return Err(Error::dimension(
                "evaluate labels",
                self.n_labels,
                test.n_labels(),
            ));
        }
        let cost = CostFunction::new(cost);
        let probs = self.predict_proba(&test.features)?;
        let mut per_iteration = Vec::with_capacity(probs.len());
        for p in &probs {
            let predictions = threshold_probs(p);
            let mut total = 0.0;
            for (truth, pred) in test.labels.iter().zip(&predictions) {
                total += cost.evaluate(truth, pred)?;
            }
            per_iteration.push(total / test.n_examples() as f64);
        }
        let final_value = *per_iteration.last().expect("B >= 1");
        Ok(Evaluation {
            per_iteration,
            final_value,
        })
    }

    /// The recurrent transformation with each row divided by its diagonal
    /// entry, interpretable as pairwise label correlation when the cell is
    /// the simple sigmoid one and the hidden width equals the label count.
    pub fn extract_memory_matrix(&self) -> Result<MemoryMatrix> {
        if self.config.cell != CellKind::Srn {
            return Err(Error::Config(format!(
                "memory matrix extraction requires the srn cell, model uses {}",
                self.config.cell
            )));
        }
        if self.config.hidden_dim != self.n_labels {
            return Err(Error::Config(format!(
                "memory matrix extraction requires hidden_dim == n_labels, got {} != {}",
                self.config.hidden_dim, self.n_labels
            )));
        }
        let w = &self.cell.recurrent_w[0];
        let k = self.n_labels;
        let mut normalized = vec![vec![0.0; k]; k];
        let mut unnormalized_rows = Vec::new();
        for i in 0..k {
            let diag = w[[i, i]];
            if diag.abs() < 1e-8 {
                unnormalized_rows.push(i);
                for j in 0..k {
                    normalized[i][j] = w[[i, j]];
                }
            } else {
                for j in 0..k {
                    normalized[i][j] = w[[i, j]] / diag;
                }
            }
        }
        Ok(MemoryMatrix {
            normalized,
            unnormalized_rows,
        })
    }

    /// Test-only hook: replaces the recurrent matrix of a simple cell.
    #[doc(hidden)]
    pub fn set_recurrent_matrix(&mut self, w: Tensor) -> Result<()> {
        if w.dim() != self.cell.recurrent_w[0].dim() {
            return Err(Error::dimension(
                "set_recurrent_matrix",
                format!("{:?}", self.cell.recurrent_w[0].dim()),
                format!("{:?}", w.dim()),
            ));
        }
        self.cell.recurrent_w[0] = w;
        Ok(())
    }

    /// Test-only hook: zeroes every parameter.
    #[doc(hidden)]
    pub fn zero_parameters(&mut self) {
        for t in self.cell.tensors_mut() {
            t.fill(0.0);
        }
        self.dense_w.fill(0.0);
        self.dense_b.fill(0.0);
    }

    /// Test-only hook: sets the dense bias row.
    #[doc(hidden)]
    pub fn set_dense_bias(&mut self, bias: &[f64]) -> Result<()> {
        if bias.len() != self.n_labels {
            return Err(Error::dimension(
                "set_dense_bias",
                self.n_labels,
                bias.len(),
            ));
        }
        for (j, &v) in bias.iter().enumerate() {
            self.dense_b[[0, j]] = v;
        }
        Ok(())
    }
}

/// Thresholds each probability row at 0.5 (>= 0.5 maps to 1).
pub fn threshold_probs(p: &Tensor) -> Vec<LabelVector> {
    p.rows()
        .into_iter()
        .map(|row| {
            LabelVector::from_bools(&row.iter().map(|&v| v >= 0.5).collect::<Vec<_>>())
        })
        .collect()
}

/// Outcome of the L2 grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Selection {
    pub best_l2: f64,
    /// One row per grid value: the per-fold validation criterion values and
    /// their mean.
    pub table: Vec<L2GridPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2GridPoint {
    pub l2: f64,
    pub fold_values: Vec<f64>,
    pub mean: f64,
}

/// The regularization grid used when no explicit strength is given.
pub const L2_GRID: [f64; 8] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

/// Picks the grid value whose mean cross-validated criterion is best for the
/// config's cost (direction-aware). Exact ties resolve toward the larger,
/// i.e. more regularized, value. A single-point grid returns immediately
/// without training.
pub fn select_l2(
    ds: &Dataset,
    grid: &[f64],
    folds: usize,
    config: &ModelConfig,
    tc: &TrainConfig,
) -> Result<L2Selection> {
    if grid.is_empty() {
        return Err(Error::Config("l2 grid must not be empty".into()));
    }
    if grid.len() == 1 {
        return Ok(L2Selection {
            best_l2: grid[0],
            table: vec![L2GridPoint {
                l2: grid[0],
                fold_values: Vec::new(),
                mean: f64::NAN,
            }],
        });
    }
    if folds < 2 {
        return Err(Error::Config("cross-validation needs >= 2 folds".into()));
    }
    if ds.n_examples() < folds {
        return Err(Error::Size(format!(
            "{} examples cannot form {folds} folds",
            ds.n_examples()
        )));
    }

    // One shared permutation, chopped into `folds` contiguous chunks.
    let mut order: Vec<usize> = (0..ds.n_examples()).collect();
    {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ CV_SEED_MIX);
        order.shuffle(&mut rng);
    }
    let fold_size = ds.n_examples() / folds;
    let fold_ranges: Vec<(usize, usize)> = (0..folds)
        .map(|f| {
            let start = f * fold_size;
            let end = if f == folds - 1 {
                ds.n_examples()
            } else {
                start + fold_size
            };
            (start, end)
        })
        .collect();

    let cost = CostFunction::new(config.cost);
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(f64, f64)> = None; // (l2, mean)
    for &l2 in grid {
        let mut fold_values = Vec::with_capacity(folds);
        for (f, &(start, end)) in fold_ranges.iter().enumerate() {
            let val_idx: Vec<usize> = order[start..end].to_vec();
            let train_idx: Vec<usize> = order[..start]
                .iter()
                .chain(&order[end..])
                .cloned()
                .collect();
            let train_fold = ds.subset(&train_idx)?;
            let val_fold = ds.subset(&val_idx)?;
            let (train_scaled, scaler) = crate::data::scale_features(&train_fold)?;
            let val_scaled = scaler.transform(&val_fold)?;

            let mut fold_config = config.clone();
            fold_config.l2_strength = l2;
            fold_config.seed = config.seed.wrapping_add(f as u64);
            let mut model =
                RethinkNetModel::new(fold_config, ds.n_features(), ds.n_labels())?;
            model.fit(&train_scaled, tc)?;
            fold_values.push(model.evaluate(&val_scaled, config.cost)?.final_value);
        }
        let mean = fold_values.iter().sum::<f64>() / folds as f64;
        let better = match best {
            None => true,
            Some((best_l2, best_mean)) => {
                cost.is_better(mean, best_mean) || (mean == best_mean && l2 > best_l2)
            }
        };
        if better {
            best = Some((l2, mean));
        }
        table.push(L2GridPoint {
            l2,
            fold_values,
            mean,
        });
    }
    Ok(L2Selection {
        best_l2: best.expect("grid not empty").0,
        table,
    })
}

// Keeps the cross-validation permutation decoupled from the model seed.
const CV_SEED_MIX: u64 = 0x5e1e_c7c5;

#[cfg(test)]
mod tests;
