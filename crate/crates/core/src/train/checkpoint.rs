use super::{LossKind, Splits, TrainError};
use crate::data::Normalizer;
use crate::fastweight::{FastWeightModel, ModelDims, Variant};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Bumped whenever the flat parameter ordering changes.
pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub variant: Variant,
    pub dims: ModelDims,
    /// Input window length `L`.
    #[serde(rename = "L")]
    pub window: usize,
    pub horizon: usize,
    pub seed: u64,
    pub epoch: usize,
    pub normalizer: Normalizer,
    pub splits: Splits,
    pub loss: LossKind,
    pub alpha: f64,
    #[serde(default)]
    pub dataset: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn model(&self) -> FastWeightModel {
        FastWeightModel::new(self.header.variant, self.header.dims)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.header.format_version != CHECKPOINT_FORMAT {
            return Err(TrainError::Checkpoint(format!(
                "format version {} (expected {CHECKPOINT_FORMAT})",
                self.header.format_version
            )));
        }
        let expected = self.model().param_count();
        if self.params.len() != expected {
            return Err(TrainError::Checkpoint(format!(
                "{} parameters stored, {} expected for {} with {:?}",
                self.params.len(),
                expected,
                self.header.variant,
                self.header.dims
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, TrainError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let c: Checkpoint = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TrainError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrainError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
