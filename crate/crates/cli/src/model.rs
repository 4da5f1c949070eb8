//! `PCLF` classifier checkpoints and their JSON sidecar.
//!
//! Layout: magic `PCLF`, `version: u32`, then four `u32` layer widths
//! (`input`, `hidden1`, `hidden2`, `2`), then every parameter as a
//! little-endian `f64` in `W1, b1, W2, b2, W3, b3` order. The sidecar at
//! `<model>.json` records how the model was trained so `cluster` can rebuild
//! the same pair features.

use std::path::{Path, PathBuf};

use pairclust_core::classifier::OUTPUTS;
use pairclust_core::{FeatureMode, LayerDims, MlpClassifier};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, FormatError};
use crate::io::{read_bytes, write_bytes, Reader};

pub const MODEL_MAGIC: [u8; 4] = *b"PCLF";
pub const MODEL_HEADER_LEN: usize = 24;

pub fn encode_model(model: &MlpClassifier) -> Vec<u8> {
    let dims = model.dims();
    let mut out = Vec::with_capacity(MODEL_HEADER_LEN + 8 * model.parameters().len());
    out.extend_from_slice(&MODEL_MAGIC);
    out.extend_from_slice(&crate::io::FORMAT_VERSION.to_le_bytes());
    for w in [dims.input, dims.hidden1, dims.hidden2, OUTPUTS] {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    for p in model.parameters() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_model(bytes: &[u8]) -> Result<MlpClassifier, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MODEL_MAGIC)?;
    let (input, h1, h2, out) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
    if out as usize != OUTPUTS {
        return Err(FormatError::Invalid(format!("model has {out} outputs, expected {OUTPUTS}")));
    }
    let dims = LayerDims::new(input as usize, h1 as usize, h2 as usize)?;
    r.expect_payload(8 * dims.num_parameters() as u128)?;
    let params = r.rest().chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(MlpClassifier::from_parameters(dims, params)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SgdSettings {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_step: Option<usize>,
    pub lr_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainingStats {
    pub rows: usize,
    pub positives: usize,
    pub negatives: usize,
    pub balanced: bool,
    pub mining_k: usize,
    pub train_accuracy: f64,
    pub loss_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelSidecar {
    pub mode: String,
    /// Embedding dimension the model was trained on.
    pub d: usize,
    /// Neighborhood size behind the weighted-neighbor features.
    pub k: usize,
    pub seed: u64,
    pub input_dim: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub normalize: bool,
    pub renormalize_context: bool,
    pub knn_backend: String,
    pub sgd: SgdSettings,
    pub training: TrainingStats,
}

impl ModelSidecar {
    pub fn feature_mode(&self) -> Result<FeatureMode, pairclust_core::Error> {
        self.mode.parse()
    }
}

pub fn sidecar_path(model: &Path) -> PathBuf {
    let mut name = model.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_model(path: &Path, model: &MlpClassifier, sidecar: &ModelSidecar) -> Result<(), CliError> {
    write_bytes(path, &encode_model(model))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(sidecar).map_err(|source| CliError::Json { path: side.clone(), source })?;
    write_bytes(&side, format!("{json}\n").as_bytes())
}

/// Loads a checkpoint and its sidecar, checking that they agree.
pub fn read_model(path: &Path) -> Result<(MlpClassifier, ModelSidecar), CliError> {
    let model =
        decode_model(&read_bytes(path)?).map_err(|source| CliError::Format { path: path.to_owned(), source })?;
    let side = sidecar_path(path);
    let sidecar: ModelSidecar =
        serde_json::from_slice(&read_bytes(&side)?).map_err(|source| CliError::Json { path: side.clone(), source })?;
    let mode = sidecar.feature_mode()?;
    let dims = model.dims();
    if mode.input_dim(sidecar.d) != dims.input || sidecar.input_dim != dims.input {
        return Err(pairclust_core::Error::ModelMismatch(format!(
            "sidecar says {mode} over d = {} but the checkpoint takes {} inputs",
            sidecar.d, dims.input
        ))
        .into());
    }
    Ok((model, sidecar))
}
