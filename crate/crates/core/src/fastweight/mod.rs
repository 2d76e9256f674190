//! Fast-weight programmers.
//!
//! A slow programmer reads `x_t` and proposes an update `Δ_t` (plus a gate
//! logit in gated variants); the fast programmer's parameters follow either
//!
//! * the additive rule `W_{t+1} = W_t + Δ_t`, or
//! * the gated rule `W_{t+1} = g_t W_t + (1 − g_t) Δ_t`, `g_t = σ(logit_t)`.
//!
//! Fast parameters are always handled as one flat vector. For the linear
//! fast programmer the layout is `[W (in×out, row-major), b (out)]` and the
//! update is `[L ⊗ D, B]`; for the HQKAN fast programmer it is the flat
//! HQKAN parameter vector.

mod model;
mod nets;

pub use model::{
    FastWeightModel, ModelDims, RecursionMode, TrajectoryReport, TrajectoryRow, Variant,
};
pub use nets::{FastNet, SlowNet};

use crate::autodiff::{AutodiffError, BackwardRule, Tape, Tensor, Var};
use crate::qkan::QkanError;
use crate::scan::ScanError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FastWeightError {
    #[error("expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("gate {0} outside [0, 1]")]
    GateOutOfRange(f64),
    #[error("input sequence is empty")]
    EmptySequence,
    #[error("unknown variant `{0}` (expected one of fwp, fwp-ungated, g-fwp, gqkan-fwp, g-qkanfwp, gqkan-qkanfwp)")]
    UnknownVariant(String),
    #[error("folded recursion requires an HQKAN fast programmer")]
    FoldUnsupported,
    #[error(transparent)]
    Qkan(#[from] QkanError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Scan(#[from] ScanError),
}

fn check_len(expected: usize, got: usize) -> Result<(), FastWeightError> {
    if expected == got {
        Ok(())
    } else {
        Err(FastWeightError::ShapeMismatch { expected, got })
    }
}

fn check_gate(g: f64) -> Result<(), FastWeightError> {
    if (0.0..=1.0).contains(&g) {
        Ok(())
    } else {
        Err(FastWeightError::GateOutOfRange(g))
    }
}

/// `(L ⊗ D)_{ij} = L_i D_j`, row-major `[l.len(), d.len()]`.
pub fn outer(l: &[f64], d: &[f64]) -> Vec<f64> {
    l.iter().flat_map(|li| d.iter().map(move |dj| li * dj)).collect()
}

/// Flat linear-programmer update `[L ⊗ D, B]`.
pub fn linear_delta(l: &[f64], d: &[f64], b: &[f64]) -> Result<Vec<f64>, FastWeightError> {
    check_len(d.len(), b.len())?;
    let mut out = outer(l, d);
    out.extend_from_slice(b);
    Ok(out)
}

/// `W + Δ`.
pub fn ungated_step(state: &[f64], delta: &[f64]) -> Result<Vec<f64>, FastWeightError> {
    check_len(state.len(), delta.len())?;
    Ok(state.iter().zip(delta).map(|(w, d)| w + d).collect())
}

/// `g·W + (1 − g)·Δ`.
pub fn gated_step(state: &[f64], delta: &[f64], g: f64) -> Result<Vec<f64>, FastWeightError> {
    check_gate(g)?;
    check_len(state.len(), delta.len())?;
    Ok(state
        .iter()
        .zip(delta)
        .map(|(w, d)| g * w + (1.0 - g) * d)
        .collect())
}

/// `(β_{0,t}, β_{1,t}, …, β_{t,t})` for gates `g_1 … g_t`, so that
/// `W_{t+1} = β_{0,t} W_1 + Σ_k β_{k,t} Δ_k`.
pub fn beta_coefficients(gates: &[f64]) -> Result<Vec<f64>, FastWeightError> {
    for &g in gates {
        check_gate(g)?;
    }
    let t = gates.len();
    let mut beta = vec![0.0; t + 1];
    // suffix[k] = ∏_{s > k} g_s (1-based k)
    let mut suffix = 1.0;
    for k in (1..=t).rev() {
        beta[k] = (1.0 - gates[k - 1]) * suffix;
        suffix *= gates[k - 1];
    }
    beta[0] = suffix;
    Ok(beta)
}

/// Gradients produced by [`backward_through_time`].
#[derive(Debug, Clone, PartialEq)]
pub struct BpttGrads {
    /// `∂L/∂W_1`.
    pub init: Vec<f64>,
    /// `∂L/∂Δ_t`, flat `[T, dim]`.
    pub deltas: Vec<f64>,
    /// `∂L/∂g_t`.
    pub gates: Vec<f64>,
}

/// States `W_1 … W_T` visited by the gated recursion (flat `[T, dim]`),
/// followed by the final state `W_{T+1}`.
pub fn gated_states(
    init: &[f64],
    deltas: &[f64],
    gates: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), FastWeightError> {
    let dim = init.len();
    check_len(gates.len() * dim, deltas.len())?;
    let mut visited = Vec::with_capacity(deltas.len());
    let mut w = init.to_vec();
    for (g, d) in gates.iter().zip(deltas.chunks_exact(dim.max(1))) {
        visited.extend_from_slice(&w);
        w.iter_mut()
            .zip(d)
            .for_each(|(w, d)| *w = g * *w + (1.0 - g) * d);
    }
    Ok((visited, w))
}

/// Reverse sweep of the gated recursion given `∂L/∂W_{T+1}`:
/// `dW_t = g_t dW_{t+1}`, `dΔ_t = (1 − g_t) dW_{t+1}`,
/// `dg_t = ⟨dW_{t+1}, W_t − Δ_t⟩`.
pub fn backward_through_time(
    states: &[f64],
    deltas: &[f64],
    gates: &[f64],
    d_final: &[f64],
) -> Result<BpttGrads, FastWeightError> {
    let dim = d_final.len();
    let t = gates.len();
    check_len(t * dim, deltas.len())?;
    check_len(t * dim, states.len())?;
    let mut dw = d_final.to_vec();
    let mut d_deltas = vec![0.0; t * dim];
    let mut d_gates = vec![0.0; t];
    for k in (0..t).rev() {
        let g = gates[k];
        let w = &states[k * dim..(k + 1) * dim];
        let d = &deltas[k * dim..(k + 1) * dim];
        let mut dg = 0.0;
        for (((out, dwi), wi), di) in d_deltas[k * dim..(k + 1) * dim]
            .iter_mut()
            .zip(&mut dw)
            .zip(w)
            .zip(d)
        {
            *out = (1.0 - g) * *dwi;
            dg += *dwi * (wi - di);
            *dwi *= g;
        }
        d_gates[k] = dg;
    }
    Ok(BpttGrads {
        init: dw,
        deltas: d_deltas,
        gates: d_gates,
    })
}

struct GatedRecursionRule;

impl BackwardRule for GatedRecursionRule {
    fn name(&self) -> &'static str {
        "gated_recursion"
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let (init, deltas, gates) = (inputs[0].data(), inputs[1].data(), inputs[2].data());
        let (states, _) = gated_states(init, deltas, gates).expect("shapes checked in forward");
        let grads =
            backward_through_time(&states, deltas, gates, g).expect("shapes checked in forward");
        vec![Some(grads.init), Some(grads.deltas), Some(grads.gates)]
    }
}

struct AdditiveRecursionRule;

impl BackwardRule for AdditiveRecursionRule {
    fn name(&self) -> &'static str {
        "additive_recursion"
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let rows = inputs[1].len() / g.len();
        let deltas: Vec<f64> = (0..rows).flat_map(|_| g.iter().copied()).collect();
        vec![Some(g.to_vec()), Some(deltas)]
    }
}

struct OuterUpdateRule {
    in_dim: usize,
    out_dim: usize,
}

impl BackwardRule for OuterUpdateRule {
    fn name(&self) -> &'static str {
        "outer_update"
    }

    fn backward(&self, inputs: &[&Tensor], _output: &Tensor, g: &[f64]) -> Vec<Option<Vec<f64>>> {
        let (m, n) = (self.in_dim, self.out_dim);
        let width = m + 2 * n;
        let heads = inputs[0].data();
        let rows = heads.len() / width;
        let pw = m * n + n;
        let mut dh = vec![0.0; heads.len()];
        for r in 0..rows {
            let h = &heads[r * width..(r + 1) * width];
            let gr = &g[r * pw..(r + 1) * pw];
            let dr = &mut dh[r * width..(r + 1) * width];
            for i in 0..m {
                for j in 0..n {
                    let gij = gr[i * n + j];
                    dr[i] += gij * h[m + j];
                    dr[m + j] += gij * h[i];
                }
            }
            dr[m + n..].copy_from_slice(&gr[m * n..]);
        }
        vec![Some(dh)]
    }
}

/// Tape op: final state of the gated recursion from `init[dim]` over
/// `deltas[rows, dim]` and `gates[rows]`.
pub fn gated_recursion(
    tape: &mut Tape,
    init: Var,
    deltas: Var,
    gates: Var,
) -> Result<Var, FastWeightError> {
    let (_, last) = gated_states(
        tape.value(init).data(),
        tape.value(deltas).data(),
        tape.value(gates).data(),
    )?;
    let out = Tensor::vector(last);
    Ok(tape.custom(&[init, deltas, gates], out, Box::new(GatedRecursionRule))?)
}

/// Tape op: `init + Σ_rows deltas`.
pub fn additive_recursion(tape: &mut Tape, init: Var, deltas: Var) -> Result<Var, FastWeightError> {
    let dim = tape.value(init).len();
    let d = tape.value(deltas).data();
    if d.len() % dim != 0 {
        return Err(FastWeightError::ShapeMismatch {
            expected: dim,
            got: d.len(),
        });
    }
    let mut w = tape.value(init).data().to_vec();
    for row in d.chunks_exact(dim) {
        w.iter_mut().zip(row).for_each(|(w, d)| *w += d);
    }
    Ok(tape.custom(&[init, deltas], Tensor::vector(w), Box::new(AdditiveRecursionRule))?)
}

/// Tape op: rows `[L (in), D (out), B (out)]` to rows `[L ⊗ D, B]`.
pub fn outer_update(
    tape: &mut Tape,
    heads: Var,
    in_dim: usize,
    out_dim: usize,
) -> Result<Var, FastWeightError> {
    let t = tape.value(heads);
    let width = in_dim + 2 * out_dim;
    let (rows, cols) = t.dims2().ok_or(FastWeightError::ShapeMismatch {
        expected: width,
        got: t.len(),
    })?;
    check_len(width, cols)?;
    let mut data = Vec::with_capacity(rows * (in_dim * out_dim + out_dim));
    for h in t.data().chunks_exact(width) {
        data.extend(linear_delta(
            &h[..in_dim],
            &h[in_dim..in_dim + out_dim],
            &h[in_dim + out_dim..],
        )?);
    }
    let out = Tensor::matrix(rows, in_dim * out_dim + out_dim, data)?;
    Ok(tape.custom(&[heads], out, Box::new(OuterUpdateRule { in_dim, out_dim }))?)
}
