//! Sliding windows, losses, Adam, the two training protocols, evaluation
//! metrics and the window-size sweep.

mod adam;
mod checkpoint;
mod eval;
mod loss;
mod sweep;
mod trainer;
mod window;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, CheckpointHeader, CHECKPOINT_FORMAT};
pub use eval::{argmax, evaluate, predict_all, shot_sweep, Metrics, MetricsReport, ShotPoint};
pub use loss::{loss_mse, loss_peak_aware, LossKind};
pub use sweep::{stage_sweep, write_loss_csv, write_sweep_csv, LossRecord, SweepConfig, SweepRow};
pub use trainer::{sample_gradient, train, EpochRecord, TrainRun};
pub use window::{prepare, prepare_with, Prepared, Split, Splits, Window, WindowSpec};

use crate::autodiff::AutodiffError;
use crate::data::DataError;
use crate::fastweight::FastWeightError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("series of length {len} is too short: {need} values needed")]
    TooShort { len: usize, need: usize },
    #[error("{0} split has no windows")]
    EmptySplit(Split),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite gradient at parameter {index}")]
    NonFiniteGradient { index: usize },
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss:e}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },
    #[error("empty evaluation set")]
    EmptyTestSet,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] FastWeightError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl TrainError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteGradient { .. }
                | TrainError::Diverged { .. }
                | TrainError::Autodiff(AutodiffError::NonFinite { .. })
        )
    }
}

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Init,
    Shuffle,
    Shots,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::Shuffle => 2,
            Stream::Shots => 3,
        }
    }
}

/// ChaCha8 generator for `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub seed: u64,
    pub loss: LossKind,
    /// Peak weight for [`LossKind::PeakAware`].
    pub alpha: f64,
    pub splits: Splits,
    /// Worker threads for per-sample gradients (results do not depend on it).
    pub threads: usize,
    /// Abort once a batch loss exceeds this.
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 4,
            learning_rate: 1e-3,
            adam: AdamConfig::default(),
            seed: 0,
            loss: LossKind::Mse,
            alpha: 1.0,
            splits: Splits::HOLDOUT,
            threads: 1,
            divergence_threshold: 1e6,
        }
    }
}

impl TrainConfig {
    /// Protocol for the forecasting task: 80/10/10 splits, peak-aware loss,
    /// 100 epochs, best-validation checkpoint.
    pub fn forecasting() -> Self {
        Self {
            epochs: 100,
            loss: LossKind::PeakAware,
            splits: Splits::TRAIN_VAL_TEST,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if !(self.learning_rate > 0.0) {
            return bad(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha {} must be nonnegative", self.alpha));
        }
        self.adam.validate()?;
        self.splits.validate()
    }
}
