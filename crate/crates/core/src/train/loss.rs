use super::TrainError;
use crate::autodiff::{Tape, Tensor, Var};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Mse,
    /// `(y − ŷ)²(1 + αy)`, for targets normalized to `[0, 1]`.
    PeakAware,
}

impl std::str::FromStr for LossKind {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "peak-aware" | "peak_aware" => Ok(LossKind::PeakAware),
            _ => Err(TrainError::InvalidConfig(format!(
                "unknown loss `{s}` (valid: mse, peak-aware)"
            ))),
        }
    }
}

fn check(y: &[f64], y_hat: &[f64]) -> Result<(), TrainError> {
    if y.len() != y_hat.len() {
        return Err(TrainError::ShapeMismatch {
            expected: y.len(),
            got: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(TrainError::EmptyTestSet);
    }
    Ok(())
}

pub fn loss_mse(y: &[f64], y_hat: &[f64]) -> Result<f64, TrainError> {
    loss_peak_aware(y, y_hat, 0.0)
}

pub fn loss_peak_aware(y: &[f64], y_hat: &[f64], alpha: f64) -> Result<f64, TrainError> {
    check(y, y_hat)?;
    let total: f64 = y
        .iter()
        .zip(y_hat)
        .map(|(y, p)| (y - p).powi(2) * (1.0 + alpha * y))
        .sum();
    Ok(total / y.len() as f64)
}

impl LossKind {
    pub fn value(self, y: &[f64], y_hat: &[f64], alpha: f64) -> Result<f64, TrainError> {
        match self {
            LossKind::Mse => loss_mse(y, y_hat),
            LossKind::PeakAware => loss_peak_aware(y, y_hat, alpha),
        }
    }

    /// Scalar loss node for prediction `y_hat` (`[1, H]`) against `y`.
    pub(crate) fn on_tape(
        self,
        tape: &mut Tape,
        y_hat: Var,
        y: &[f64],
        alpha: f64,
    ) -> Result<Var, TrainError> {
        let shape = tape.value(y_hat).shape().to_vec();
        check(y, tape.value(y_hat).data())?;
        let target = tape.constant(Tensor::new(shape.clone(), y.to_vec())?);
        let diff = tape.sub(y_hat, target)?;
        let mut sq = tape.mul(diff, diff)?;
        if self == LossKind::PeakAware {
            let w = tape.constant(Tensor::new(shape, y.iter().map(|v| 1.0 + alpha * v).collect())?);
            sq = tape.mul(sq, w)?;
        }
        Ok(tape.mean(sq)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(loss_mse(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(loss_peak_aware(&[1.0], &[0.0], 1.0).unwrap(), 2.0);
        let y = [0.1, 0.7, 0.2];
        let p = [0.0, 0.5, 0.9];
        assert_eq!(loss_peak_aware(&y, &p, 0.0).unwrap(), loss_mse(&y, &p).unwrap());
        assert!(loss_peak_aware(&y, &p, 1.0).unwrap() >= loss_mse(&y, &p).unwrap());
        assert!(matches!(
            loss_mse(&[1.0], &[1.0, 2.0]),
            Err(TrainError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn tape_loss_matches_values_and_gradient() {
        let y = [0.2, 0.9, 0.5];
        let p = [0.1, 0.4, 0.8];
        for kind in [LossKind::Mse, LossKind::PeakAware] {
            let mut tape = Tape::new();
            let x = tape.leaf(Tensor::matrix(1, 3, p.to_vec()).unwrap(), true);
            let l = kind.on_tape(&mut tape, x, &y, 1.0).unwrap();
            let want = kind.value(&y, &p, 1.0).unwrap();
            assert!((tape.value(l).item().unwrap() - want).abs() < 1e-15);
            tape.backward(l).unwrap();
            let g = tape.grad(x).unwrap();
            for i in 0..3 {
                let w = if kind == LossKind::PeakAware { 1.0 + y[i] } else { 1.0 };
                let expect = 2.0 * (p[i] - y[i]) * w / 3.0;
                assert!((g[i] - expect).abs() < 1e-15);
            }
        }
    }
}
