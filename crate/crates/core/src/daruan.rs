//! Single-qubit data re-uploading activation.
//!
//! One edge evaluates
//!
//! ```text
//! U(x) = Π_{l=L..1} RY(φ_l) · RZ(θ_l) · RY(w_l·x + b_l)
//! f(x) = s · ⟨0|U† Z U|0⟩ + o
//! ```
//!
//! with the rightmost factor (layer 1, data rotation first) applied first.
//! The flat parameter layout of an edge is layer-major
//! `[w_1, b_1, θ_1, φ_1, …, w_L, b_L, θ_L, φ_L, s, o]`.
//!
//! Gradients are exact: the state chain is differentiated gate by gate with
//! a single reverse sweep over the stored intermediate states.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::f64::consts::PI;
use thiserror::Error;

/// Trainable reals per re-uploading layer: data weight, data bias, RZ and RY angles.
pub const PARAMS_PER_LAYER: usize = 4;

/// Parameters of an edge with `layers` re-uploading layers (`4L + 2`).
pub const fn edge_param_count(layers: usize) -> usize {
    PARAMS_PER_LAYER * layers + 2
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DaruanError {
    #[error("non-finite input {0}")]
    NonFiniteInput(f64),
    #[error("non-finite edge parameter at index {0}")]
    NonFiniteParam(usize),
    #[error("an edge needs at least one layer")]
    NoLayers,
    #[error("expected {expected} edge parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("shot count must be at least 1")]
    ZeroShots,
}

/// Pure single-qubit state `α|0⟩ + β|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl QubitState {
    pub fn ground() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    /// `⟨Z⟩ = |α|² − |β|²`.
    pub fn z_expectation(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    #[inline]
    pub fn apply_ry(&mut self, angle: f64) {
        let (s, c) = (0.5 * angle).sin_cos();
        let (a, b) = (self.alpha, self.beta);
        self.alpha = a * c - b * s;
        self.beta = a * s + b * c;
    }

    #[inline]
    pub fn apply_rz(&mut self, angle: f64) {
        let (s, c) = (0.5 * angle).sin_cos();
        self.alpha *= Complex64::new(c, -s);
        self.beta *= Complex64::new(c, s);
    }
}

/// One re-uploading layer: `RY(rot_y) · RZ(rot_z) · RY(data_weight·x + data_bias)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReuploadLayer {
    pub data_weight: f64,
    pub data_bias: f64,
    pub rot_z: f64,
    pub rot_y: f64,
}

/// Parameters of a single DARUAN edge.
#[derive(Debug, Clone, PartialEq)]
pub struct DaruanEdge {
    pub layers: Vec<ReuploadLayer>,
    pub out_scale: f64,
    pub out_offset: f64,
}

/// Gradient of an edge output w.r.t. its flat parameters and its input.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGrad {
    pub params: Vec<f64>,
    pub input: f64,
}

impl DaruanEdge {
    /// All angles zero, unit output scale: `U = I`, so `f(x) = 1`.
    pub fn identity(layers: usize) -> Self {
        Self {
            layers: vec![ReuploadLayer::default(); layers],
            out_scale: 1.0,
            out_offset: 0.0,
        }
    }

    pub fn from_params(params: &[f64], layers: usize) -> Result<Self, DaruanError> {
        if layers == 0 {
            return Err(DaruanError::NoLayers);
        }
        check_len(params, layers)?;
        let body = params[..PARAMS_PER_LAYER * layers]
            .chunks_exact(PARAMS_PER_LAYER)
            .map(|c| ReuploadLayer {
                data_weight: c[0],
                data_bias: c[1],
                rot_z: c[2],
                rot_y: c[3],
            })
            .collect();
        Ok(Self {
            layers: body,
            out_scale: params[PARAMS_PER_LAYER * layers],
            out_offset: params[PARAMS_PER_LAYER * layers + 1],
        })
    }

    pub fn to_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(edge_param_count(self.layers.len()));
        for l in &self.layers {
            out.extend_from_slice(&[l.data_weight, l.data_bias, l.rot_z, l.rot_y]);
        }
        out.push(self.out_scale);
        out.push(self.out_offset);
        out
    }

    /// Near-identity random start.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, layers: usize) -> Self {
        let mut p = vec![0.0; edge_param_count(layers)];
        init_params(rng, layers, &mut p);
        Self::from_params(&p, layers).expect("consistent length")
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    fn validate(&self, x: f64) -> Result<Vec<f64>, DaruanError> {
        if self.layers.is_empty() {
            return Err(DaruanError::NoLayers);
        }
        if !x.is_finite() {
            return Err(DaruanError::NonFiniteInput(x));
        }
        let p = self.to_params();
        if let Some(i) = p.iter().position(|v| !v.is_finite()) {
            return Err(DaruanError::NonFiniteParam(i));
        }
        Ok(p)
    }

    /// The state after each of the `3L` gates, preceded by `|0⟩`.
    pub fn states(&self, x: f64) -> Vec<QubitState> {
        let mut psi = QubitState::ground();
        let mut out = vec![psi];
        for l in &self.layers {
            psi.apply_ry(l.data_weight * x + l.data_bias);
            out.push(psi);
            psi.apply_rz(l.rot_z);
            out.push(psi);
            psi.apply_ry(l.rot_y);
            out.push(psi);
        }
        out
    }

    /// Raw `⟨Z⟩` before the output affine.
    pub fn expectation(&self, x: f64) -> Result<f64, DaruanError> {
        let p = self.validate(x)?;
        Ok(expectation_raw(&p, self.layers.len(), x))
    }

    /// `s·⟨Z⟩ + o`.
    pub fn forward(&self, x: f64) -> Result<f64, DaruanError> {
        let p = self.validate(x)?;
        Ok(forward_raw(&p, self.layers.len(), x))
    }

    /// Exact gradient of `upstream · f(x)` w.r.t. every parameter and `x`.
    pub fn grad(&self, x: f64, upstream: f64) -> Result<EdgeGrad, DaruanError> {
        let p = self.validate(x)?;
        let mut params = vec![0.0; p.len()];
        let mut scratch = Vec::new();
        let (_, input) = backward_raw(&p, self.layers.len(), x, upstream, &mut params, &mut scratch);
        Ok(EdgeGrad { params, input })
    }

    /// Finite-shot estimate: `s · mean(z) + o` over `shots` Z-basis outcomes.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        x: f64,
        shots: u64,
        rng: &mut R,
    ) -> Result<f64, DaruanError> {
        let z = self.expectation(x)?;
        let mean = sample_mean_z(z, shots, rng)?;
        Ok(self.out_scale * mean + self.out_offset)
    }
}

fn check_len(params: &[f64], layers: usize) -> Result<(), DaruanError> {
    let expected = edge_param_count(layers);
    if params.len() != expected {
        return Err(DaruanError::ParamCount {
            expected,
            got: params.len(),
        });
    }
    Ok(())
}

/// Fills one edge's flat parameters with the default initialisation:
/// angles and data biases in `U(−π/8, π/8)`, data weights in `U(−1, 1)/L`,
/// unit output scale and zero offset.
pub fn init_params<R: Rng + ?Sized>(rng: &mut R, layers: usize, out: &mut [f64]) {
    let a = PI / 8.0;
    for c in out[..PARAMS_PER_LAYER * layers].chunks_exact_mut(PARAMS_PER_LAYER) {
        c[0] = rng.gen_range(-1.0..1.0) / layers as f64;
        c[1] = rng.gen_range(-a..a);
        c[2] = rng.gen_range(-a..a);
        c[3] = rng.gen_range(-a..a);
    }
    out[PARAMS_PER_LAYER * layers] = 1.0;
    out[PARAMS_PER_LAYER * layers + 1] = 0.0;
}

/// `⟨Z⟩` of an edge given its flat parameters.
#[inline]
pub fn expectation_raw(params: &[f64], layers: usize, x: f64) -> f64 {
    let mut psi = QubitState::ground();
    for c in params[..PARAMS_PER_LAYER * layers].chunks_exact(PARAMS_PER_LAYER) {
        psi.apply_ry(c[0] * x + c[1]);
        psi.apply_rz(c[2]);
        psi.apply_ry(c[3]);
    }
    psi.z_expectation()
}

#[inline]
pub fn forward_raw(params: &[f64], layers: usize, x: f64) -> f64 {
    let k = PARAMS_PER_LAYER * layers;
    params[k] * expectation_raw(params, layers, x) + params[k + 1]
}

#[inline]
fn ry_derivative(psi: &QubitState, angle: f64) -> QubitState {
    // d/da RY(a) = ½ [[-sin, -cos], [cos, -sin]] (half angles)
    let (s, c) = (0.5 * angle).sin_cos();
    QubitState {
        alpha: (psi.alpha * (-s) - psi.beta * c) * 0.5,
        beta: (psi.alpha * c - psi.beta * s) * 0.5,
    }
}

#[inline]
fn rz_derivative(psi: &QubitState, angle: f64) -> QubitState {
    let (s, c) = (0.5 * angle).sin_cos();
    QubitState {
        alpha: psi.alpha * Complex64::new(c, -s) * Complex64::new(0.0, -0.5),
        beta: psi.beta * Complex64::new(c, s) * Complex64::new(0.0, 0.5),
    }
}

#[inline]
fn overlap_re(lambda: &QubitState, v: &QubitState) -> f64 {
    // Re(λ† v)
    (lambda.alpha.conj() * v.alpha + lambda.beta.conj() * v.beta).re
}

/// Accumulates `upstream · ∂f/∂params` into `dparams` and returns
/// `(f(x), upstream · ∂f/∂x)`.
///
/// `scratch` holds the `3L + 1` intermediate states and is reused across calls.
pub fn backward_raw(
    params: &[f64],
    layers: usize,
    x: f64,
    upstream: f64,
    dparams: &mut [f64],
    scratch: &mut Vec<QubitState>,
) -> (f64, f64) {
    let k = PARAMS_PER_LAYER * layers;
    let (scale, offset) = (params[k], params[k + 1]);

    scratch.clear();
    let mut psi = QubitState::ground();
    scratch.push(psi);
    for c in params[..k].chunks_exact(PARAMS_PER_LAYER) {
        psi.apply_ry(c[0] * x + c[1]);
        scratch.push(psi);
        psi.apply_rz(c[2]);
        scratch.push(psi);
        psi.apply_ry(c[3]);
        scratch.push(psi);
    }
    let z = psi.z_expectation();

    dparams[k] += upstream * z;
    dparams[k + 1] += upstream;

    // f = ψ†Zψ; adjoint seeded with Zψ, derivative = 2·Re(λ† G'ψ_in)
    let g = upstream * scale * 2.0;
    let mut lambda = QubitState {
        alpha: psi.alpha,
        beta: -psi.beta,
    };
    let mut dx = 0.0;
    for l in (0..layers).rev() {
        let c = &params[PARAMS_PER_LAYER * l..PARAMS_PER_LAYER * (l + 1)];
        let d = &mut dparams[PARAMS_PER_LAYER * l..PARAMS_PER_LAYER * (l + 1)];

        let psi_in = &scratch[3 * l + 2];
        d[3] += g * overlap_re(&lambda, &ry_derivative(psi_in, c[3]));
        lambda.apply_ry(-c[3]);

        let psi_in = &scratch[3 * l + 1];
        d[2] += g * overlap_re(&lambda, &rz_derivative(psi_in, c[2]));
        lambda.apply_rz(-c[2]);

        let angle = c[0] * x + c[1];
        let psi_in = &scratch[3 * l];
        let da = g * overlap_re(&lambda, &ry_derivative(psi_in, angle));
        lambda.apply_ry(-angle);
        d[0] += da * x;
        d[1] += da;
        dx += da * c[0];
    }
    (scale * z + offset, dx)
}

/// Mean of `shots` ±1 outcomes with `P(+1) = (1 + z)/2`.
pub fn sample_mean_z<R: Rng + ?Sized>(z: f64, shots: u64, rng: &mut R) -> Result<f64, DaruanError> {
    if shots == 0 {
        return Err(DaruanError::ZeroShots);
    }
    let p = ((1.0 + z) * 0.5).clamp(0.0, 1.0);
    let ups = Binomial::new(shots, p).expect("p clamped to [0,1]").sample(rng);
    Ok((2.0 * ups as f64 - shots as f64) / shots as f64)
}
