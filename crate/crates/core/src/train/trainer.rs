use super::{stream_rng, Adam, LossKind, Prepared, Split, Stream, TrainConfig, TrainError, Window};
use crate::autodiff::{Tape, Tensor};
use crate::fastweight::FastWeightModel;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample loss seen while training the epoch.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainRun {
    /// Final parameters, or the best-validation ones when a validation split exists.
    pub params: Vec<f64>,
    /// Epoch (1-based) the returned parameters come from.
    pub epoch: usize,
    pub curve: Vec<EpochRecord>,
}

impl TrainRun {
    pub fn best_val_loss(&self) -> Option<f64> {
        self.curve.get(self.epoch - 1).and_then(|r| r.val_loss)
    }
}

/// Loss and parameter gradient for one window on its own tape.
pub fn sample_gradient(
    model: &FastWeightModel,
    params: &[f64],
    window: &Window,
    loss: LossKind,
    alpha: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    let mut tape = Tape::new().with_finite_check(false);
    let p = tape.leaf(Tensor::vector(params.to_vec()), true);
    let y_hat = model.forward_on_tape(&mut tape, p, &window.input)?;
    let l = loss.on_tape(&mut tape, y_hat, &window.target, alpha)?;
    tape.backward(l)?;
    let value = tape.value(l).item().unwrap_or(f64::NAN);
    let grad = tape.grad(p).map_or_else(|| vec![0.0; params.len()], <[f64]>::to_vec);
    Ok((value, grad))
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, TrainError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| TrainError::InvalidConfig(format!("thread pool: {e}")))
}

/// Mean loss of `windows` under `params`.
pub(crate) fn mean_loss(
    model: &FastWeightModel,
    params: &[f64],
    windows: &[Window],
    loss: LossKind,
    alpha: f64,
    pool: &rayon::ThreadPool,
) -> Result<f64, TrainError> {
    if windows.is_empty() {
        return Err(TrainError::EmptyTestSet);
    }
    let losses: Vec<f64> = pool.install(|| {
        windows
            .par_iter()
            .map(|w| loss.value(&w.target, &model.predict(params, &w.input)?, alpha))
            .collect::<Result<_, TrainError>>()
    })?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Trains `model` on `data.train` with Adam and shuffled mini-batches.
///
/// Gradients of a batch are computed per sample (in parallel when
/// `threads > 1`) and reduced in batch order, so the result is bit-identical
/// for every thread count.
pub fn train(model: &FastWeightModel, data: &Prepared, cfg: &TrainConfig) -> Result<TrainRun, TrainError> {
    cfg.validate()?;
    let mut params = model.init_params(&mut stream_rng(cfg.seed, Stream::Init));
    train_from(model, data, cfg, &mut params)
}

pub(crate) fn train_from(
    model: &FastWeightModel,
    data: &Prepared,
    cfg: &TrainConfig,
    params: &mut Vec<f64>,
) -> Result<TrainRun, TrainError> {
    if data.train.is_empty() {
        return Err(TrainError::EmptySplit(Split::Train));
    }
    let use_val = cfg.splits.has_val() && !data.val.is_empty();
    let pool = thread_pool(cfg.threads)?;
    let mut shuffle = stream_rng(cfg.seed, Stream::Shuffle);
    let mut adam = Adam::new(params.len(), cfg.learning_rate, cfg.adam);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut grad = vec![0.0; params.len()];

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle);
        let mut seen = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let current: &[f64] = params;
            let results: Vec<(f64, Vec<f64>)> = pool.install(|| {
                batch
                    .par_iter()
                    .map(|&i| sample_gradient(model, current, &data.train[i], cfg.loss, cfg.alpha))
                    .collect::<Result<_, TrainError>>()
            })?;
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for (l, g) in &results {
                batch_loss += l;
                grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
            let scale = 1.0 / batch.len() as f64;
            batch_loss *= scale;
            grad.iter_mut().for_each(|g| *g *= scale);
            if !(batch_loss <= cfg.divergence_threshold) {
                return Err(TrainError::Diverged {
                    epoch,
                    batch: b,
                    loss: batch_loss,
                });
            }
            seen += batch_loss * batch.len() as f64;
            adam.step(params, &grad)?;
        }
        let train_loss = seen / data.train.len() as f64;
        let val_loss = if use_val {
            Some(mean_loss(model, params, &data.val, cfg.loss, cfg.alpha, &pool)?)
        } else {
            None
        };
        log::debug!("epoch {epoch}: train {train_loss:.6e} val {val_loss:?}");
        curve.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if let Some(v) = val_loss {
            if best.as_ref().map_or(true, |(b, _, _)| v < *b) {
                best = Some((v, epoch, params.clone()));
            }
        }
    }
    let (params, epoch) = match best {
        Some((_, e, p)) => (p, e),
        None => (params.clone(), cfg.epochs),
    };
    Ok(TrainRun { params, epoch, curve })
}
