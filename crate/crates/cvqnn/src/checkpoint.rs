//! Versioned JSON checkpoints: a trained model plus the PCA encoder it was
//! trained with, so evaluation needs nothing else.

use std::path::Path;

use cvqnn_core::model::{FeatureStats, HybridModel, ModelKind, NUM_WIRES};
use cvqnn_core::pca::PcaModel;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CHECKPOINT_FORMAT: &str = "cvqnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const PCA_MAGIC: &str = "PCA1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRecord {
    pub magic: String,
    pub input_dim: usize,
    pub k: usize,
    pub mean: Vec<f64>,
    /// One row per component.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub iterations: usize,
}

impl From<&PcaModel> for PcaRecord {
    fn from(p: &PcaModel) -> Self {
        Self {
            magic: PCA_MAGIC.to_string(),
            input_dim: p.input_dim,
            k: p.k,
            mean: p.mean.clone(),
            components: p.components.chunks(p.input_dim).map(<[f64]>::to_vec).collect(),
            explained_variance: p.explained_variance.clone(),
            explained_variance_ratio: p.explained_variance_ratio.clone(),
            iterations: p.iterations,
        }
    }
}

impl PcaRecord {
    pub fn to_model(&self) -> CliResult<PcaModel> {
        let bad = |m: String| CliError::data(format!("checkpoint PCA block: {m}"));
        if self.magic != PCA_MAGIC {
            return Err(bad(format!("unknown magic '{}'", self.magic)));
        }
        if self.mean.len() != self.input_dim
            || self.components.len() != self.k
            || self.components.iter().any(|c| c.len() != self.input_dim)
            || self.explained_variance.len() != self.k
            || self.explained_variance_ratio.len() != self.k
        {
            return Err(bad(format!("shapes do not match k = {}, input_dim = {}", self.k, self.input_dim)));
        }
        Ok(PcaModel {
            input_dim: self.input_dim,
            k: self.k,
            mean: self.mean.clone(),
            components: self.components.concat(),
            explained_variance: self.explained_variance.clone(),
            explained_variance_ratio: self.explained_variance_ratio.clone(),
            iterations: self.iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub num_classes: usize,
    pub circuit_params: Vec<f64>,
    /// `num_classes` rows of 4.
    pub head_weights: Vec<Vec<f64>>,
    pub head_bias: Vec<f64>,
    pub feature_stats: FeatureStats,
    pub pca: PcaRecord,
    pub dataset: String,
    pub fold: usize,
    pub seed: u64,
}

impl Checkpoint {
    pub fn new(model: &HybridModel, pca: &PcaModel, dataset: &str, fold: usize, seed: u64) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            kind: model.kind,
            num_classes: model.num_classes,
            circuit_params: model.circuit_params.clone(),
            head_weights: model.head_weights.chunks(NUM_WIRES).map(<[f64]>::to_vec).collect(),
            head_bias: model.head_bias.clone(),
            feature_stats: model.feature_stats,
            pca: PcaRecord::from(pca),
            dataset: dataset.to_string(),
            fold,
            seed,
        }
    }

    pub fn model(&self) -> CliResult<HybridModel> {
        if self.head_weights.iter().any(|r| r.len() != NUM_WIRES) {
            return Err(CliError::data(format!("checkpoint head rows must have {NUM_WIRES} weights")));
        }
        let model = HybridModel {
            kind: self.kind,
            num_classes: self.num_classes,
            circuit_params: self.circuit_params.clone(),
            head_weights: self.head_weights.concat(),
            head_bias: self.head_bias.clone(),
            feature_stats: self.feature_stats,
        };
        model.validate().map_err(|e| CliError::data(format!("checkpoint: {e}")))?;
        Ok(model)
    }

    pub fn pca_model(&self) -> CliResult<PcaModel> {
        self.pca.to_model()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes") + "\n"
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(CliError::data(format!("not a checkpoint (format '{}')", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(CliError::data(format!("unsupported checkpoint version {}", ck.version)));
        }
        Ok(ck)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }
}
