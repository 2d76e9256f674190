use super::FastWeightError;
use crate::autodiff::{matmul_raw, Tape, Tensor, Var};
use crate::qkan::HqkanDims;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Slow programmer: a trunk producing features, then an affine head.
///
/// MLP layout: `[W1 (in×hidden), b1, W2 (hidden×out), b2]`; the trunk is
/// `tanh(x W1 + b1)`. HQKAN layout is the usual flat HQKAN vector with the
/// decoder acting as the head. Either way the head weight and bias are the
/// trailing `(features + 1) × out` parameters, so they read as one
/// `[features + 1, out]` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SlowNet {
    Mlp {
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
    },
    Hqkan(HqkanDims),
}

impl SlowNet {
    pub fn in_dim(&self) -> usize {
        match *self {
            SlowNet::Mlp { in_dim, .. } => in_dim,
            SlowNet::Hqkan(d) => d.in_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match *self {
            SlowNet::Mlp { out_dim, .. } => out_dim,
            SlowNet::Hqkan(d) => d.out_dim,
        }
    }

    /// Width of the trunk output.
    pub fn feature_dim(&self) -> usize {
        match *self {
            SlowNet::Mlp { hidden, .. } => hidden,
            SlowNet::Hqkan(d) => d.latent,
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            SlowNet::Mlp {
                in_dim,
                hidden,
                out_dim,
            } => in_dim * hidden + hidden + hidden * out_dim + out_dim,
            SlowNet::Hqkan(d) => d.param_count(),
        }
    }

    /// Offset of the head weight inside the slow parameters.
    pub fn head_start(&self) -> usize {
        self.param_count() - (self.feature_dim() + 1) * self.out_dim()
    }

    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            SlowNet::Mlp { in_dim, hidden, .. } => {
                let (trunk, head) = out.split_at_mut(in_dim * hidden + hidden);
                let a = 1.0 / (in_dim as f64).sqrt();
                trunk.iter_mut().for_each(|v| *v = rng.gen_range(-a..a));
                let a = 1.0 / (hidden as f64).sqrt();
                head.iter_mut().for_each(|v| *v = rng.gen_range(-a..a));
            }
            SlowNet::Hqkan(d) => d.init_params(rng, out),
        }
    }

    /// Trunk features for a single input.
    pub fn trunk(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FastWeightError> {
        super::check_len(self.param_count(), params.len())?;
        match *self {
            SlowNet::Mlp { in_dim, hidden, .. } => {
                super::check_len(in_dim, x.len())?;
                let (w, b) = params[..in_dim * hidden + hidden].split_at(in_dim * hidden);
                let mut h = matmul_raw(x, w, 1, in_dim, hidden);
                h.iter_mut().zip(b).for_each(|(h, b)| *h = (*h + b).tanh());
                Ok(h)
            }
            SlowNet::Hqkan(d) => Ok(d.trunk(params, x)?),
        }
    }

    /// Full output (head applied to the trunk) for a single input.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FastWeightError> {
        let h = self.trunk(params, x)?;
        let (f, o) = (self.feature_dim(), self.out_dim());
        let head = &params[self.head_start()..];
        let mut y = matmul_raw(&h, &head[..f * o], 1, f, o);
        y.iter_mut().zip(&head[f * o..]).for_each(|(y, b)| *y += b);
        Ok(y)
    }

    /// Trunk over a batch `x[rows, in] -> [rows, features]`.
    pub fn trunk_on_tape(
        &self,
        tape: &mut Tape,
        params: Var,
        x: Var,
    ) -> Result<Var, FastWeightError> {
        match *self {
            SlowNet::Mlp { in_dim, hidden, .. } => {
                let w = tape.slice(params, 0, in_dim * hidden)?;
                let w = tape.reshape(w, &[in_dim, hidden])?;
                let b = tape.slice(params, in_dim * hidden, hidden)?;
                let h = tape.matmul(x, w)?;
                let h = tape.add_bias(h, b)?;
                Ok(tape.tanh(h)?)
            }
            SlowNet::Hqkan(d) => Ok(d.trunk_on_tape(tape, params, x)?),
        }
    }

    /// Head weight and bias as one `[features + 1, out]` matrix.
    pub fn head_matrix_on_tape(&self, tape: &mut Tape, params: Var) -> Result<Var, FastWeightError> {
        let (f, o) = (self.feature_dim(), self.out_dim());
        let m = tape.slice(params, self.head_start(), (f + 1) * o)?;
        Ok(tape.reshape(m, &[f + 1, o])?)
    }

    /// Full output over a batch `x[rows, in] -> [rows, out]`.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        params: Var,
        x: Var,
    ) -> Result<Var, FastWeightError> {
        let h = self.trunk_on_tape(tape, params, x)?;
        let (f, o) = (self.feature_dim(), self.out_dim());
        let start = self.head_start();
        let w = tape.slice(params, start, f * o)?;
        let w = tape.reshape(w, &[f, o])?;
        let b = tape.slice(params, start + f * o, o)?;
        let y = tape.matmul(h, w)?;
        Ok(tape.add_bias(y, b)?)
    }
}

/// Fast programmer: `y = x W + b`, or an HQKAN network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FastNet {
    Linear { in_dim: usize, out_dim: usize },
    Hqkan(HqkanDims),
}

impl FastNet {
    pub fn in_dim(&self) -> usize {
        match *self {
            FastNet::Linear { in_dim, .. } => in_dim,
            FastNet::Hqkan(d) => d.in_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match *self {
            FastNet::Linear { out_dim, .. } => out_dim,
            FastNet::Hqkan(d) => d.out_dim,
        }
    }

    pub fn param_count(&self) -> usize {
        match *self {
            FastNet::Linear { in_dim, out_dim } => in_dim * out_dim + out_dim,
            FastNet::Hqkan(d) => d.param_count(),
        }
    }

    /// Number of values the slow programmer emits per step (gate excluded).
    pub fn update_width(&self) -> usize {
        match *self {
            FastNet::Linear { in_dim, out_dim } => in_dim + 2 * out_dim,
            FastNet::Hqkan(d) => d.param_count(),
        }
    }

    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            FastNet::Linear { in_dim, out_dim } => {
                let a = 1.0 / (in_dim as f64).sqrt();
                let (w, b) = out.split_at_mut(in_dim * out_dim);
                w.iter_mut().for_each(|v| *v = rng.gen_range(-a..a));
                b.fill(0.0);
            }
            FastNet::Hqkan(d) => d.init_params(rng, out),
        }
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, FastWeightError> {
        super::check_len(self.param_count(), params.len())?;
        match *self {
            FastNet::Linear { in_dim, out_dim } => {
                super::check_len(in_dim, x.len())?;
                let (w, b) = params.split_at(in_dim * out_dim);
                let mut y = matmul_raw(x, w, 1, in_dim, out_dim);
                y.iter_mut().zip(b).for_each(|(y, b)| *y += b);
                Ok(y)
            }
            FastNet::Hqkan(d) => Ok(d.forward(params, x)?),
        }
    }

    /// As [`FastNet::forward`], with every DARUAN expectation estimated from
    /// `shots` measurements. The linear programmer has nothing to sample.
    pub fn forward_sampled<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        x: &[f64],
        shots: u64,
        rng: &mut R,
    ) -> Result<Vec<f64>, FastWeightError> {
        match *self {
            FastNet::Linear { .. } => self.forward(params, x),
            FastNet::Hqkan(d) => Ok(d.forward_sampled(params, x, shots, rng)?),
        }
    }

    /// `params[P]`, `x[1, in] -> [1, out]`.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        params: Var,
        x: Var,
    ) -> Result<Var, FastWeightError> {
        match *self {
            FastNet::Linear { in_dim, out_dim } => {
                let w = tape.slice(params, 0, in_dim * out_dim)?;
                let w = tape.reshape(w, &[in_dim, out_dim])?;
                let b = tape.slice(params, in_dim * out_dim, out_dim)?;
                let y = tape.matmul(x, w)?;
                Ok(tape.add_bias(y, b)?)
            }
            FastNet::Hqkan(d) => Ok(d.forward_on_tape(tape, params, x)?),
        }
    }
}

/// Convenience: a `[rows, cols]` constant.
pub(super) fn constant_matrix(
    tape: &mut Tape,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
) -> Result<Var, FastWeightError> {
    Ok(tape.constant(Tensor::matrix(rows, cols, data)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tape_and_plain_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let slows = [
            SlowNet::Mlp {
                in_dim: 2,
                hidden: 5,
                out_dim: 3,
            },
            SlowNet::Hqkan(HqkanDims::new(2, 3, 3, 2)),
        ];
        let x = [0.3, -0.7];
        for s in slows {
            let mut p = vec![0.0; s.param_count()];
            s.init_params(&mut rng, &mut p);
            let plain = s.forward(&p, &x).unwrap();
            let mut tape = Tape::new();
            let pv = tape.leaf(Tensor::vector(p.clone()), true);
            let xv = constant_matrix(&mut tape, 1, 2, x.to_vec()).unwrap();
            let y = s.forward_on_tape(&mut tape, pv, xv).unwrap();
            for (a, b) in tape.value(y).data().iter().zip(&plain) {
                assert!((a - b).abs() < 1e-14);
            }
            // head matrix rows: features, then the bias row
            let m = s.head_matrix_on_tape(&mut tape, pv).unwrap();
            let h = s.trunk(&p, &x).unwrap();
            let mut ext = h.clone();
            ext.push(1.0);
            let via_head = matmul_raw(&ext, tape.value(m).data(), 1, ext.len(), s.out_dim());
            for (a, b) in via_head.iter().zip(&plain) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn linear_fast_programmer() {
        let f = FastNet::Linear {
            in_dim: 2,
            out_dim: 2,
        };
        let p = [1.0, 2.0, 3.0, 4.0, 0.5, -0.5];
        assert_eq!(f.forward(&p, &[1.0, 1.0]).unwrap(), vec![4.5, 5.5]);
        assert_eq!(f.update_width(), 6);
        assert_eq!(f.param_count(), 6);
    }

    #[test]
    fn serde_tags() {
        let s = SlowNet::Hqkan(HqkanDims::new(1, 2, 3, 2));
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"kind\":\"hqkan\""));
        assert_eq!(serde_json::from_str::<SlowNet>(&text).unwrap(), s);
    }
}
