use super::trainer::thread_pool;
use super::{loss_mse, stream_rng, Stream, TrainError, Window};
use crate::data::Normalizer;
use crate::fastweight::FastWeightModel;
use crate::stats::{loglog_fit, summarize, Summary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Index of the first maximum.
pub fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &x) in v.iter().enumerate() {
        if best.map_or(true, |(_, b)| x > b) {
            best = Some((i, x));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// MSE on normalized targets.
    pub scaled_mse: f64,
    /// Mean `|max y − max ŷ|` in raw units.
    pub pae: f64,
    /// Mean `|argmax y − argmax ŷ|` in steps.
    pub pte: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    /// MSE between sampled and exact-expectation predictions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_mse: Option<f64>,
}

impl Metrics {
    /// Metrics of predictions `preds` against `windows`' targets.
    pub fn compute(windows: &[Window], preds: &[Vec<f64>], norm: &Normalizer) -> Result<Self, TrainError> {
        if windows.is_empty() {
            return Err(TrainError::EmptyTestSet);
        }
        if windows.len() != preds.len() {
            return Err(TrainError::ShapeMismatch {
                expected: windows.len(),
                got: preds.len(),
            });
        }
        let (mut sq, mut count, mut pae, mut pte) = (0.0, 0usize, 0.0, 0.0);
        for (w, p) in windows.iter().zip(preds) {
            sq += loss_mse(&w.target, p)? * p.len() as f64;
            count += p.len();
            let y_max = w.target.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let p_max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            pae += (norm.invert(y_max) - norm.invert(p_max)).abs();
            let (ty, tp) = (argmax(&w.target).unwrap_or(0), argmax(p).unwrap_or(0));
            pte += ty.abs_diff(tp) as f64;
        }
        let n = windows.len() as f64;
        Ok(Self {
            scaled_mse: sq / count as f64,
            pae: pae / n,
            pte: pte / n,
            shots: None,
            relative_mse: None,
        })
    }
}

/// Exact predictions for every window.
pub fn predict_all(
    model: &FastWeightModel,
    params: &[f64],
    windows: &[Window],
    threads: usize,
) -> Result<Vec<Vec<f64>>, TrainError> {
    let pool = thread_pool(threads)?;
    pool.install(|| {
        windows
            .par_iter()
            .map(|w| model.predict(params, &w.input).map_err(TrainError::from))
            .collect()
    })
}

fn predict_sampled_all(
    model: &FastWeightModel,
    params: &[f64],
    windows: &[Window],
    shots: u64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, TrainError> {
    let mut rng = stream_rng(seed, Stream::Shots);
    windows
        .iter()
        .map(|w| model.predict_sampled(params, &w.input, shots, &mut rng).map_err(TrainError::from))
        .collect()
}

fn mse_between(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            s += (p - q).powi(2);
            n += 1;
        }
    }
    s / n as f64
}

/// Evaluates `params` on `windows`. With `shots`, the fast programmer's
/// expectations are estimated from that many measurements (drawn from the
/// shot stream of `seed`) and the relative MSE to the exact outputs is added.
pub fn evaluate(
    model: &FastWeightModel,
    params: &[f64],
    windows: &[Window],
    norm: &Normalizer,
    shots: Option<u64>,
    seed: u64,
    threads: usize,
) -> Result<Metrics, TrainError> {
    if windows.is_empty() {
        return Err(TrainError::EmptyTestSet);
    }
    let exact = predict_all(model, params, windows, threads)?;
    match shots {
        None => Metrics::compute(windows, &exact, norm),
        Some(n) => {
            let sampled = predict_sampled_all(model, params, windows, n, seed)?;
            let mut m = Metrics::compute(windows, &sampled, norm)?;
            m.shots = Some(n);
            m.relative_mse = Some(mse_between(&sampled, &exact));
            Ok(m)
        }
    }
}

/// Metrics across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_seed: Vec<Metrics>,
    pub scaled_mse: Summary,
    pub pae: Summary,
    pub pte: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_mse: Option<Summary>,
}

impl MetricsReport {
    pub fn from_runs(per_seed: Vec<Metrics>) -> Self {
        let pick = |f: fn(&Metrics) -> f64| summarize(&per_seed.iter().map(f).collect::<Vec<_>>());
        let rel: Option<Vec<f64>> = per_seed.iter().map(|m| m.relative_mse).collect();
        Self {
            scaled_mse: pick(|m| m.scaled_mse),
            pae: pick(|m| m.pae),
            pte: pick(|m| m.pte),
            relative_mse: rel.filter(|r| !r.is_empty()).map(|r| summarize(&r)),
            per_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotPoint {
    pub shots: u64,
    pub relative_mse: f64,
}

/// Relative MSE of sampled predictions for each shot count, plus the
/// log-log slope against the shot count.
pub fn shot_sweep(
    model: &FastWeightModel,
    params: &[f64],
    windows: &[Window],
    shots: &[u64],
    seed: u64,
) -> Result<(Vec<ShotPoint>, f64), TrainError> {
    if windows.is_empty() {
        return Err(TrainError::EmptyTestSet);
    }
    let exact = predict_all(model, params, windows, 1)?;
    let points: Vec<ShotPoint> = shots
        .iter()
        .map(|&n| {
            let sampled = predict_sampled_all(model, params, windows, n, seed)?;
            Ok(ShotPoint {
                shots: n,
                relative_mse: mse_between(&sampled, &exact),
            })
        })
        .collect::<Result<_, TrainError>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.shots as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.relative_mse).collect();
    let (slope, _) = loglog_fit(&xs, &ys);
    Ok((points, slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::NormRange;

    fn win(target: Vec<f64>) -> Window {
        Window {
            start: 0,
            input: vec![0.0],
            target,
        }
    }

    #[test]
    fn first_argmax() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn perfect_prediction_scores_zero() {
        let norm = Normalizer::fit(&[0.0, 200.0], NormRange::Unit).unwrap();
        let ws = vec![win(vec![0.1, 0.5, 0.2]), win(vec![0.9, 0.3, 0.0])];
        let preds: Vec<Vec<f64>> = ws.iter().map(|w| w.target.clone()).collect();
        let m = Metrics::compute(&ws, &preds, &norm).unwrap();
        assert_eq!((m.scaled_mse, m.pae, m.pte), (0.0, 0.0, 0.0));
    }

    #[test]
    fn shifted_peak_gives_timing_error() {
        let norm = Normalizer::fit(&[0.0, 200.0], NormRange::Unit).unwrap();
        let y: Vec<f64> = (0..40).map(|i| (-((i as f64 - 12.0) / 4.0).powi(2)).exp()).collect();
        let mut shifted = vec![0.0; 3];
        shifted.extend_from_slice(&y[..37]);
        let m = Metrics::compute(&[win(y)], &[shifted], &norm).unwrap();
        assert_eq!(m.pte, 3.0);
        assert!(m.pae.abs() < 1e-12);
        let halved: Vec<f64> = (0..4).map(|i| 0.5 * f64::from(i == 2)).collect();
        let m = Metrics::compute(&[win(vec![0.0, 0.0, 1.0, 0.0])], &[halved], &norm).unwrap();
        assert!((m.pae - 100.0).abs() < 1e-12);
    }

    #[test]
    fn order_invariance() {
        let norm = Normalizer::fit(&[0.0, 1.0], NormRange::Unit).unwrap();
        let ws = vec![win(vec![0.1, 0.5]), win(vec![0.9, 0.3]), win(vec![0.2, 0.25])];
        let ps = vec![vec![0.2, 0.4], vec![0.5, 0.6], vec![0.0, 0.3]];
        let a = Metrics::compute(&ws, &ps, &norm).unwrap();
        let (wr, pr): (Vec<_>, Vec<_>) = ws.into_iter().zip(ps).rev().unzip();
        let b = Metrics::compute(&wr, &pr, &norm).unwrap();
        assert!((a.scaled_mse - b.scaled_mse).abs() < 1e-15);
        assert!((a.pae - b.pae).abs() < 1e-12);
        assert_eq!(a.pte, b.pte);
    }

    #[test]
    fn empty_set_is_an_error() {
        let norm = Normalizer::fit(&[0.0, 1.0], NormRange::Unit).unwrap();
        assert!(matches!(Metrics::compute(&[], &[], &norm), Err(TrainError::EmptyTestSet)));
    }

    #[test]
    fn report_uses_population_std() {
        let m = |v| Metrics {
            scaled_mse: v,
            pae: 0.0,
            pte: 0.0,
            shots: None,
            relative_mse: None,
        };
        let r = MetricsReport::from_runs(vec![m(1.0), m(3.0)]);
        assert_eq!(r.scaled_mse.mean, 2.0);
        assert_eq!(r.scaled_mse.std, 1.0);
        assert!(r.relative_mse.is_none());
    }
}
