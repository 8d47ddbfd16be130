//! Model persistence: a versioned, self-describing JSON container holding
//! the configuration, every parameter tensor (shape plus row-major values)
//! and the training history. JSON numbers are written with the shortest
//! round-tripping representation, so a load after a save reproduces
//! evaluation outputs bit for bit. Optimizer state is not persisted; a
//! loaded model starts with fresh moments.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{CellParams, Tensor};

use super::{ModelConfig, RethinkNetModel};

pub(crate) const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorDef {
    rows: usize,
    cols: usize,
    /// Row-major values, rows * cols of them.
    data: Vec<f64>,
}

impl TensorDef {
    fn from_tensor(t: &Tensor) -> Self {
        TensorDef {
            rows: t.nrows(),
            cols: t.ncols(),
            data: t.iter().cloned().collect(),
        }
    }

    fn into_tensor(self) -> Result<Tensor> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Schema(format!(
                "tensor payload holds {} values but declares {} x {}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Tensor::from_shape_vec((self.rows, self.cols), self.data)
            .map_err(|e| Error::Schema(e.to_string()))
    }
}

/// On-disk form of a trained model. The optional scaler carries the
/// training-set min-max statistics so held-out data can be transformed
/// consistently at evaluation time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub config: ModelConfig,
    pub input_dim: usize,
    pub n_labels: usize,
    cell_input_w: Vec<TensorDef>,
    cell_recurrent_w: Vec<TensorDef>,
    cell_bias: Vec<TensorDef>,
    dense_w: TensorDef,
    dense_b: TensorDef,
    pub history: Vec<f64>,
    #[serde(default)]
    pub scaler: Option<crate::data::ScalingParams>,
}

impl RethinkNetModel {
    pub fn to_model_file(&self) -> ModelFile {
        let cell = self.cell_params();
        let (dense_w, dense_b) = self.dense_params();
        ModelFile {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            input_dim: self.input_dim(),
            n_labels: self.n_labels(),
            cell_input_w: cell.input_w.iter().map(TensorDef::from_tensor).collect(),
            cell_recurrent_w: cell.recurrent_w.iter().map(TensorDef::from_tensor).collect(),
            cell_bias: cell.bias.iter().map(TensorDef::from_tensor).collect(),
            dense_w: TensorDef::from_tensor(dense_w),
            dense_b: TensorDef::from_tensor(dense_b),
            history: self.history().to_vec(),
            scaler: None,
        }
    }

    pub fn from_model_file(file: ModelFile) -> Result<Self> {
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model format version {} (this build reads {FORMAT_VERSION})",
                file.format_version
            )));
        }
        file.config.validate()?;
        let gates = file.config.cell.gates();
        if file.cell_input_w.len() != gates
            || file.cell_recurrent_w.len() != gates
            || file.cell_bias.len() != gates
        {
            return Err(Error::Schema(format!(
                "cell {} expects {gates} gates",
                file.config.cell
            )));
        }
        let to_tensors = |defs: Vec<TensorDef>| -> Result<Vec<Tensor>> {
            defs.into_iter().map(TensorDef::into_tensor).collect()
        };
        let cell = CellParams {
            kind: file.config.cell,
            input_w: to_tensors(file.cell_input_w)?,
            recurrent_w: to_tensors(file.cell_recurrent_w)?,
            bias: to_tensors(file.cell_bias)?,
        };
        Ok(RethinkNetModel::from_parts(
            file.config,
            file.input_dim,
            file.n_labels,
            cell,
            file.dense_w.into_tensor()?,
            file.dense_b.into_tensor()?,
            file.history,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_model_file())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_model_file(serde_json::from_str(json)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::harness::write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}
