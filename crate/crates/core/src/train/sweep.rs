use super::{evaluate, prepare, train, Splits, TrainConfig, TrainError, WindowSpec};
use crate::data::{NormRange, RawSeries};
use crate::fastweight::{FastWeightModel, ModelDims, Variant};
use crate::stats::{summarize, Summary};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub variant: Variant,
    pub dataset: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
}

pub fn write_loss_csv<W: Write>(records: &[LossRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "variant,dataset,N,seed,epoch,split,loss")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.variant, r.dataset, r.n, r.seed, r.epoch, r.split, r.loss
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub variants: Vec<Variant>,
    pub windows: Vec<usize>,
    pub seeds: Vec<u64>,
    pub dims: ModelDims,
    pub train: TrainConfig,
    pub range: NormRange,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            windows: vec![8, 16, 32, 64],
            seeds: (0..5).collect(),
            dims: ModelDims::time_series(),
            train: TrainConfig::default(),
            range: NormRange::Symmetric,
        }
    }
}

/// Test MSE over seeds for one (variant, dataset, window) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variant: Variant,
    pub dataset: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub mse: Summary,
    /// Per-seed test MSE; diverged runs count as `+inf`.
    pub per_seed: Vec<f64>,
    pub diverged: usize,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "variant,dataset,N,seeds,mean_mse,std_mse,diverged")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:e},{:e},{}",
            r.variant, r.dataset, r.n, r.mse.n, r.mse.mean, r.mse.std, r.diverged
        )?;
    }
    Ok(())
}

/// Trains every variant on every dataset at every window size for each
/// seed (holdout protocol) and tabulates mean ± std test MSE.
pub fn stage_sweep(
    cfg: &SweepConfig,
    datasets: &[RawSeries],
) -> Result<(Vec<SweepRow>, Vec<LossRecord>), TrainError> {
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &variant in &cfg.variants {
        let model = FastWeightModel::new(variant, cfg.dims);
        for series in datasets {
            for &n in &cfg.windows {
                let data = prepare(series, WindowSpec::new(n, cfg.dims.out_dim)?, Splits::HOLDOUT, cfg.range)?;
                let mut per_seed = Vec::with_capacity(cfg.seeds.len());
                let mut diverged = 0;
                for &seed in &cfg.seeds {
                    let tc = TrainConfig {
                        seed,
                        splits: Splits::HOLDOUT,
                        ..cfg.train.clone()
                    };
                    let record = |epoch, split: &str, loss| LossRecord {
                        variant,
                        dataset: series.name.clone(),
                        n,
                        seed,
                        epoch,
                        split: split.to_string(),
                        loss,
                    };
                    match train(&model, &data, &tc) {
                        Ok(run) => {
                            let m = evaluate(&model, &run.params, &data.test, &data.normalizer, None, seed, tc.threads)?;
                            records.extend(run.curve.iter().map(|e| record(e.epoch, "train", e.train_loss)));
                            records.push(record(run.epoch, "test", m.scaled_mse));
                            per_seed.push(m.scaled_mse);
                        }
                        Err(e @ TrainError::Diverged { .. }) => {
                            log::warn!("{variant} on {} N={n} seed {seed}: {e}", series.name);
                            diverged += 1;
                            per_seed.push(f64::INFINITY);
                        }
                        Err(e) => return Err(e),
                    }
                }
                log::info!("{variant} {} N={n}: {:?}", series.name, per_seed);
                rows.push(SweepRow {
                    variant,
                    dataset: series.name.clone(),
                    n,
                    mse: summarize(&per_seed),
                    per_seed,
                    diverged,
                });
            }
        }
    }
    Ok((rows, records))
}
