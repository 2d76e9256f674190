//! Shared fixtures for the criterion benchmarks.

use gfwp_core::data::narma;
use gfwp_core::train::{prepare, Prepared, Splits, WindowSpec};
use gfwp_core::{FastWeightModel, ModelDims, NormRange, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// NARMA5 windows of length `window` with the default series split.
pub fn narma_windows(window: usize) -> Prepared {
    let series = narma(5, 300).expect("narma5");
    prepare(&series, WindowSpec::new(window, 1).expect("spec"), Splits::HOLDOUT, NormRange::Symmetric)
        .expect("prepare")
}

/// A freshly initialised single-step model and its parameters.
pub fn model(variant: Variant, seed: u64) -> (FastWeightModel, Vec<f64>) {
    let model = FastWeightModel::new(variant, ModelDims::time_series());
    let params = model.init_params(&mut ChaCha8Rng::seed_from_u64(seed));
    (model, params)
}
