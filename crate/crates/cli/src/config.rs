//! Effective run configuration: flags over config file over task defaults.

use crate::error::CliError;
use gfwp_core::train::{LossKind, Splits};
use gfwp_core::{ModelDims, NormRange, TrainConfig, Variant};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Single-step prediction: window 16, 80/20 split, `[−1, 1]` scaling.
    Series,
    /// Direct 132-step forecasting: window 528, 80/10/10 split, `[0, 1]`
    /// scaling, peak-aware loss, best-validation checkpoint.
    Forecast,
}

/// Optional overrides read from a TOML file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub window: Option<usize>,
    pub horizon: Option<usize>,
    #[serde(default)]
    pub train: TrainOverrides,
    #[serde(default)]
    pub model: ModelOverrides,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub loss: Option<LossKind>,
    pub alpha: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    pub mlp_hidden: Option<usize>,
    pub slow_latent: Option<usize>,
    pub slow_layers: Option<usize>,
    pub fast_latent: Option<usize>,
    pub fast_layers: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub task: Task,
    pub variant: Variant,
    pub window: usize,
    pub horizon: usize,
    pub dims: ModelDims,
    pub range: NormRange,
    pub train: TrainConfig,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub window: Option<usize>,
    pub horizon: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub loss: Option<LossKind>,
    pub alpha: Option<f64>,
}

impl RunConfig {
    pub fn defaults(task: Task, variant: Variant) -> Self {
        match task {
            Task::Series => Self {
                task,
                variant,
                window: 16,
                horizon: 1,
                dims: ModelDims::time_series(),
                range: NormRange::Symmetric,
                train: TrainConfig::default(),
            },
            Task::Forecast => Self {
                task,
                variant,
                window: 528,
                horizon: 132,
                dims: ModelDims::forecast(132),
                range: NormRange::Unit,
                train: TrainConfig::forecasting(),
            },
        }
    }

    pub fn resolve(task: Task, variant: Variant, file: &FileConfig, flags: &FlagOverrides) -> Self {
        let mut c = Self::defaults(task, variant);
        let t = &mut c.train;
        macro_rules! layer {
            ($dst:expr, $($src:expr),+) => {
                $( if let Some(v) = $src { $dst = v; } )+
            };
        }
        layer!(t.seed, file.seed, flags.seed);
        layer!(t.threads, file.threads, flags.threads);
        layer!(t.epochs, file.train.epochs, flags.epochs);
        layer!(t.batch_size, file.train.batch_size, flags.batch_size);
        layer!(t.learning_rate, file.train.learning_rate, flags.learning_rate);
        layer!(t.loss, file.train.loss, flags.loss);
        layer!(t.alpha, file.train.alpha, flags.alpha);
        layer!(t.adam.beta1, file.train.beta1);
        layer!(t.adam.beta2, file.train.beta2);
        layer!(t.adam.eps, file.train.eps);
        layer!(c.window, file.window, flags.window);
        layer!(c.horizon, file.horizon, flags.horizon);
        let m = &file.model;
        layer!(c.dims.mlp_hidden, m.mlp_hidden);
        layer!(c.dims.slow_latent, m.slow_latent);
        layer!(c.dims.slow_layers, m.slow_layers);
        layer!(c.dims.fast_latent, m.fast_latent);
        layer!(c.dims.fast_layers, m.fast_layers);
        c.dims.out_dim = c.horizon;
        c.train.splits = match task {
            Task::Series => Splits::HOLDOUT,
            Task::Forecast => Splits::TRAIN_VAL_TEST,
        };
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let file: FileConfig = toml::from_str(
            "seed = 9\nwindow = 32\n[train]\nepochs = 7\nlearning_rate = 0.002\n[model]\nslow_latent = 3\n",
        )
        .unwrap();
        let flags = FlagOverrides {
            epochs: Some(3),
            ..FlagOverrides::default()
        };
        let c = RunConfig::resolve(Task::Series, Variant::GFwp, &file, &flags);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.seed, 9);
        assert_eq!(c.train.learning_rate, 0.002);
        assert_eq!(c.window, 32);
        assert_eq!(c.dims.slow_latent, 3);
        assert_eq!(c.train.batch_size, 4);
    }

    #[test]
    fn forecast_defaults() {
        let c = RunConfig::resolve(Task::Forecast, Variant::GqkanQkanfwp, &FileConfig::default(), &FlagOverrides::default());
        assert_eq!((c.window, c.horizon, c.dims.out_dim), (528, 132, 132));
        assert_eq!(c.train.loss, LossKind::PeakAware);
        assert_eq!(c.train.epochs, 100);
        assert!(c.train.splits.has_val());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("epochs = 3").is_err());
    }
}
