//! Gated fast-weight programmers with single-qubit re-uploading activations.
//!
//! The crate is organised bottom-up:
//!
//! * [`autodiff`]: dense tensors and a reverse-mode tape.
//! * [`daruan`]: the single-qubit re-uploading activation, exact and sampled.
//! * [`qkan`]: QKAN layers and the encoder/processor/decoder HQKAN network.
//! * [`scan`]: the affine-pair monoid and sequential/parallel prefix scans.
//! * [`fastweight`]: gated and additive fast-weight recursions and the five
//!   model variants.
//! * [`data`]: benchmark generators, SILSO ingestion and normalization.
//! * [`train`]: windows, losses, Adam, training protocols and metrics.

pub mod autodiff;
pub mod daruan;
pub mod data;
pub mod fastweight;
pub mod qkan;
pub mod scan;
pub mod stats;
pub mod train;
#[cfg(test)]
mod testutil;

pub use autodiff::{AutodiffError, Tape, Tensor, Var};
pub use data::{DataError, Dataset, NormRange, Normalizer, RawSeries};
pub use fastweight::{FastWeightError, FastWeightModel, ModelDims, Variant};
pub use qkan::{HqkanDims, QkanError};
pub use scan::{AffinePair, PairSequence, ScanError};
pub use train::{Checkpoint, TrainConfig, TrainError};

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Daruan(#[from] daruan::DaruanError),
    #[error(transparent)]
    Qkan(#[from] QkanError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    FastWeight(#[from] FastWeightError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
