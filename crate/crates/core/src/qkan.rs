//! QKAN layers and the encoder → QKAN → decoder network (HQKAN).
//!
//! Flat parameter ordering of an [`HqkanNet`] (format-stable, recorded in
//! checkpoints as `PARAM_ORDER_VERSION`):
//!
//! 1. encoder weights `[in_dim, latent]`, row-major
//! 2. encoder bias `[latent]`
//! 3. QKAN edges, edge `(i, j)` at slot `i·latent + j`, each edge layer-major
//!    as documented in [`crate::daruan`]
//! 4. decoder weights `[latent, out_dim]`, row-major
//! 5. decoder bias `[out_dim]`
//!
//! Encoder and decoder are purely affine; all nonlinearity comes from the
//! QKAN block.

use crate::autodiff::{matmul_raw, AutodiffError, BackwardRule, Tape, Tensor, Var};
use crate::daruan::{self, edge_param_count, DaruanEdge, DaruanError, QubitState};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

pub const PARAM_ORDER_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QkanError {
    #[error("input has dimension {got}, expected {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Daruan(#[from] DaruanError),
}

/// A KAN layer with a DARUAN activation on every edge; node `j` sums its
/// incoming edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QkanLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub layers: usize,
}

impl QkanLayer {
    pub fn new(in_dim: usize, out_dim: usize, layers: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            layers,
        }
    }

    pub fn param_count(&self) -> usize {
        self.in_dim * self.out_dim * edge_param_count(self.layers)
    }

    fn edge_range(&self, i: usize, j: usize) -> Range<usize> {
        let k = edge_param_count(self.layers);
        let start = (i * self.out_dim + j) * k;
        start..start + k
    }

    pub fn edge(&self, params: &[f64], i: usize, j: usize) -> Result<DaruanEdge, DaruanError> {
        DaruanEdge::from_params(&params[self.edge_range(i, j)], self.layers)
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<(), QkanError> {
        if params.len() != self.param_count() {
            return Err(QkanError::ParamCount {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        if x.len() != self.in_dim {
            return Err(QkanError::DimMismatch {
                expected: self.in_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Exact forward for one input row.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, QkanError> {
        self.check(params, x)?;
        Ok(self.forward_unchecked(params, x))
    }

    fn forward_unchecked(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        for (i, &xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += daruan::forward_raw(&params[self.edge_range(i, j)], self.layers, xi);
            }
        }
        out
    }

    /// Forward where every edge expectation is replaced by a `shots`-sample estimate.
    pub fn forward_sampled<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        x: &[f64],
        shots: u64,
        rng: &mut R,
    ) -> Result<Vec<f64>, QkanError> {
        self.check(params, x)?;
        let k = edge_param_count(self.layers);
        let mut out = vec![0.0; self.out_dim];
        for (i, &xi) in x.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                let p = &params[self.edge_range(i, j)];
                let z = daruan::expectation_raw(p, self.layers, xi);
                let m = daruan::sample_mean_z(z, shots, rng)?;
                *o += p[k - 2] * m + p[k - 1];
            }
        }
        Ok(out)
    }

    /// Tape op over a batch of rows: `x[rows, in_dim] -> [rows, out_dim]`.
    pub fn apply(&self, tape: &mut Tape, x: Var, params: Var) -> Result<Var, QkanError> {
        let tx = tape.value(x);
        let (rows, cols) = tx.dims2().ok_or(QkanError::DimMismatch {
            expected: self.in_dim,
            got: tx.len(),
        })?;
        self.check(tape.value(params).data(), &vec![0.0; cols])?;
        let p = tape.value(params).data();
        let mut out = Vec::with_capacity(rows * self.out_dim);
        for r in 0..rows {
            out.extend(self.forward_unchecked(p, &tx.data()[r * cols..(r + 1) * cols]));
        }
        let out = Tensor::matrix(rows, self.out_dim, out)?;
        Ok(tape.custom(&[x, params], out, Box::new(QkanRule { layer: *self }))?)
    }
}

struct QkanRule {
    layer: QkanLayer,
}

impl BackwardRule for QkanRule {
    fn name(&self) -> &'static str {
        "qkan_layer"
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let (x, params) = (inputs[0], inputs[1]);
        let l = &self.layer;
        let rows = x.len() / l.in_dim;
        let mut dx = vec![0.0; x.len()];
        let mut dp = vec![0.0; params.len()];
        let mut scratch: Vec<QubitState> = Vec::with_capacity(3 * l.layers + 1);
        for r in 0..rows {
            for i in 0..l.in_dim {
                let xi = x.data()[r * l.in_dim + i];
                for j in 0..l.out_dim {
                    let up = g[r * l.out_dim + j];
                    if up == 0.0 {
                        continue;
                    }
                    let range = l.edge_range(i, j);
                    let (_, d) = daruan::backward_raw(
                        &params.data()[range.clone()],
                        l.layers,
                        xi,
                        up,
                        &mut dp[range],
                        &mut scratch,
                    );
                    dx[r * l.in_dim + i] += d;
                }
            }
        }
        vec![Some(dx), Some(dp)]
    }
}

/// Shape of an encoder → QKAN → decoder network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HqkanDims {
    pub in_dim: usize,
    pub latent: usize,
    pub out_dim: usize,
    /// Re-uploading layers per DARUAN edge.
    pub layers: usize,
}

/// Index ranges of each block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HqkanLayout {
    pub encoder_weight: Range<usize>,
    pub encoder_bias: Range<usize>,
    pub edges: Range<usize>,
    pub decoder_weight: Range<usize>,
    pub decoder_bias: Range<usize>,
}

impl HqkanDims {
    pub fn new(in_dim: usize, latent: usize, out_dim: usize, layers: usize) -> Self {
        Self {
            in_dim,
            latent,
            out_dim,
            layers,
        }
    }

    pub fn qkan(&self) -> QkanLayer {
        QkanLayer::new(self.latent, self.latent, self.layers)
    }

    pub fn layout(&self) -> HqkanLayout {
        let mut at = 0;
        let mut next = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        HqkanLayout {
            encoder_weight: next(self.in_dim * self.latent),
            encoder_bias: next(self.latent),
            edges: next(self.qkan().param_count()),
            decoder_weight: next(self.latent * self.out_dim),
            decoder_bias: next(self.out_dim),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layout().decoder_bias.end
    }

    /// Parameters of everything before the decoder.
    pub fn trunk_param_count(&self) -> usize {
        self.layout().decoder_weight.start
    }

    /// Fills `out` with a fresh initialisation: affine weights in
    /// `U(−1/√fan_in, 1/√fan_in)`, zero biases, DARUAN edges near identity.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let lay = self.layout();
        let enc = 1.0 / (self.in_dim as f64).sqrt();
        for v in &mut out[lay.encoder_weight.clone()] {
            *v = rng.gen_range(-enc..enc);
        }
        out[lay.encoder_bias.clone()].fill(0.0);
        let k = edge_param_count(self.layers);
        for edge in out[lay.edges.clone()].chunks_exact_mut(k) {
            daruan::init_params(rng, self.layers, edge);
        }
        let dec = 1.0 / (self.latent as f64).sqrt();
        for v in &mut out[lay.decoder_weight.clone()] {
            *v = rng.gen_range(-dec..dec);
        }
        out[lay.decoder_bias].fill(0.0);
    }

    fn check(&self, params: &[f64], x: &[f64]) -> Result<(), QkanError> {
        if params.len() != self.param_count() {
            return Err(QkanError::ParamCount {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        if x.len() != self.in_dim {
            return Err(QkanError::DimMismatch {
                expected: self.in_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn encode(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let lay = self.layout();
        let mut h = matmul_raw(x, &params[lay.encoder_weight], 1, self.in_dim, self.latent);
        h.iter_mut()
            .zip(&params[lay.encoder_bias])
            .for_each(|(a, b)| *a += b);
        h
    }

    fn decode(&self, params: &[f64], h: &[f64]) -> Vec<f64> {
        let lay = self.layout();
        let mut y = matmul_raw(h, &params[lay.decoder_weight], 1, self.latent, self.out_dim);
        y.iter_mut()
            .zip(&params[lay.decoder_bias])
            .for_each(|(a, b)| *a += b);
        y
    }

    /// Latent after the QKAN block (the input of the decoder).
    pub fn trunk(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, QkanError> {
        self.check(params, x)?;
        let h = self.encode(params, x);
        Ok(self.qkan().forward_unchecked(&params[self.layout().edges], &h))
    }

    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>, QkanError> {
        let z = self.trunk(params, x)?;
        Ok(self.decode(params, &z))
    }

    /// Forward with every DARUAN expectation estimated from `shots` samples.
    pub fn forward_sampled<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        x: &[f64],
        shots: u64,
        rng: &mut R,
    ) -> Result<Vec<f64>, QkanError> {
        self.check(params, x)?;
        let h = self.encode(params, x);
        let z = self
            .qkan()
            .forward_sampled(&params[self.layout().edges], &h, shots, rng)?;
        Ok(self.decode(params, &z))
    }

    /// Tape version of [`HqkanDims::trunk`] over a batch `x[rows, in_dim]`.
    pub fn trunk_on_tape(&self, tape: &mut Tape, params: Var, x: Var) -> Result<Var, QkanError> {
        let got = tape.value(params).len();
        if got != self.param_count() {
            return Err(QkanError::ParamCount {
                expected: self.param_count(),
                got,
            });
        }
        let lay = self.layout();
        let w = tape.slice(params, lay.encoder_weight.start, lay.encoder_weight.len())?;
        let w = tape.reshape(w, &[self.in_dim, self.latent])?;
        let b = tape.slice(params, lay.encoder_bias.start, lay.encoder_bias.len())?;
        let h = tape.matmul(x, w)?;
        let h = tape.add_bias(h, b)?;
        let edges = tape.slice(params, lay.edges.start, lay.edges.len())?;
        self.qkan().apply(tape, h, edges)
    }

    /// Tape forward over a batch `x[rows, in_dim] -> [rows, out_dim]`.
    pub fn forward_on_tape(&self, tape: &mut Tape, params: Var, x: Var) -> Result<Var, QkanError> {
        let z = self.trunk_on_tape(tape, params, x)?;
        let lay = self.layout();
        let w = tape.slice(params, lay.decoder_weight.start, lay.decoder_weight.len())?;
        let w = tape.reshape(w, &[self.latent, self.out_dim])?;
        let b = tape.slice(params, lay.decoder_bias.start, lay.decoder_bias.len())?;
        let y = tape.matmul(z, w)?;
        Ok(tape.add_bias(y, b)?)
    }
}

/// An HQKAN network together with its flat parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HqkanNet {
    dims: HqkanDims,
    params: Vec<f64>,
}

impl HqkanNet {
    pub fn random<R: Rng + ?Sized>(dims: HqkanDims, rng: &mut R) -> Self {
        let mut params = vec![0.0; dims.param_count()];
        dims.init_params(rng, &mut params);
        Self { dims, params }
    }

    /// View a flat parameter vector as a network.
    pub fn unflatten(dims: HqkanDims, params: Vec<f64>) -> Result<Self, QkanError> {
        if params.len() != dims.param_count() {
            return Err(QkanError::ParamCount {
                expected: dims.param_count(),
                got: params.len(),
            });
        }
        Ok(Self { dims, params })
    }

    pub fn flatten(&self) -> &[f64] {
        &self.params
    }

    pub fn dims(&self) -> HqkanDims {
        self.dims
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, QkanError> {
        self.dims.forward(&self.params, x)
    }

    pub fn forward_sampled<R: Rng + ?Sized>(
        &self,
        x: &[f64],
        shots: u64,
        rng: &mut R,
    ) -> Result<Vec<f64>, QkanError> {
        self.dims.forward_sampled(&self.params, x, shots, rng)
    }

    /// Tape forward with `params` as a trainable leaf; returns `(params, output)`.
    pub fn forward_on_tape(&self, tape: &mut Tape, x: &[f64]) -> Result<(Var, Var), QkanError> {
        let p = tape.leaf(Tensor::vector(self.params.clone()), true);
        let xv = tape.constant(Tensor::matrix(1, x.len(), x.to_vec())?);
        let y = self.dims.forward_on_tape(tape, p, xv)?;
        Ok((p, y))
    }
}
