use super::nets::{constant_matrix, FastNet, SlowNet};
use super::{
    additive_recursion, beta_coefficients, check_len, gated_recursion, linear_delta,
    outer_update, FastWeightError,
};
use crate::autodiff::{Tape, Tensor, Var};
use crate::qkan::HqkanDims;
use crate::scan::{parallel_scan, PairSequence};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

/// The five in-scope model variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Ungated, MLP slow programmer, linear fast programmer.
    Fwp,
    /// Gated, MLP slow, linear fast.
    GFwp,
    /// Gated, HQKAN slow, linear fast.
    GqkanFwp,
    /// Gated, MLP slow, HQKAN fast.
    GQkanfwp,
    /// Gated, HQKAN slow, HQKAN fast.
    GqkanQkanfwp,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Fwp,
        Variant::GFwp,
        Variant::GqkanFwp,
        Variant::GQkanfwp,
        Variant::GqkanQkanfwp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Fwp => "fwp",
            Variant::GFwp => "g-fwp",
            Variant::GqkanFwp => "gqkan-fwp",
            Variant::GQkanfwp => "g-qkanfwp",
            Variant::GqkanQkanfwp => "gqkan-qkanfwp",
        }
    }

    pub fn gated(self) -> bool {
        self != Variant::Fwp
    }

    pub fn hqkan_slow(self) -> bool {
        matches!(self, Variant::GqkanFwp | Variant::GqkanQkanfwp)
    }

    pub fn hqkan_fast(self) -> bool {
        matches!(self, Variant::GQkanfwp | Variant::GqkanQkanfwp)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = FastWeightError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        if lower == "fwp-ungated" {
            return Ok(Variant::Fwp);
        }
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == lower)
            .ok_or_else(|| FastWeightError::UnknownVariant(s.to_string()))
    }
}

/// Sizes shared by every variant; each variant uses the fields it needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Hidden width of the MLP slow programmer.
    pub mlp_hidden: usize,
    pub slow_latent: usize,
    pub slow_layers: usize,
    pub fast_latent: usize,
    pub fast_layers: usize,
}

impl ModelDims {
    /// Scalar in, scalar out; used for the single-step benchmarks.
    pub fn time_series() -> Self {
        Self {
            in_dim: 1,
            out_dim: 1,
            mlp_hidden: 16,
            slow_latent: 2,
            slow_layers: 2,
            fast_latent: 2,
            fast_layers: 2,
        }
    }

    /// Scalar in, `horizon` values out at the final step.
    pub fn forecast(horizon: usize) -> Self {
        Self {
            in_dim: 1,
            out_dim: horizon,
            mlp_hidden: 32,
            slow_latent: 4,
            slow_layers: 2,
            fast_latent: 8,
            fast_layers: 3,
        }
    }
}

/// How the tape evaluates the fast-weight recursion during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecursionMode {
    /// Materialise every `Δ_t` and run the recursion over full fast vectors.
    Direct,
    /// Run the recursion over the slow programmer's `[features, 1]` rows and
    /// apply the (affine) head once at the end. Exact for HQKAN fast
    /// programmers, whose update is the head output itself.
    Folded,
}

/// A complete fast-weight programmer.
///
/// Flat parameter layout: `[slow programmer][initial fast parameters W_1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FastWeightModel {
    variant: Variant,
    dims: ModelDims,
    slow: SlowNet,
    fast: FastNet,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl FastWeightModel {
    pub fn new(variant: Variant, dims: ModelDims) -> Self {
        let fast = if variant.hqkan_fast() {
            FastNet::Hqkan(HqkanDims::new(
                dims.in_dim,
                dims.fast_latent,
                dims.out_dim,
                dims.fast_layers,
            ))
        } else {
            FastNet::Linear {
                in_dim: dims.in_dim,
                out_dim: dims.out_dim,
            }
        };
        let slow_out = fast.update_width() + usize::from(variant.gated());
        let slow = if variant.hqkan_slow() {
            SlowNet::Hqkan(HqkanDims::new(
                dims.in_dim,
                dims.slow_latent,
                slow_out,
                dims.slow_layers,
            ))
        } else {
            SlowNet::Mlp {
                in_dim: dims.in_dim,
                hidden: dims.mlp_hidden,
                out_dim: slow_out,
            }
        };
        Self {
            variant,
            dims,
            slow,
            fast,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn slow(&self) -> SlowNet {
        self.slow
    }

    pub fn fast(&self) -> FastNet {
        self.fast
    }

    pub fn param_count(&self) -> usize {
        self.slow.param_count() + self.fast.param_count()
    }

    pub fn slow_range(&self) -> std::ops::Range<usize> {
        0..self.slow.param_count()
    }

    pub fn fast_range(&self) -> std::ops::Range<usize> {
        self.slow.param_count()..self.param_count()
    }

    /// Parameter indices feeding the gate logit (head weights, then bias).
    pub fn gate_param_indices(&self) -> Option<Vec<usize>> {
        if !self.variant.gated() {
            return None;
        }
        let (f, o) = (self.slow.feature_dim(), self.slow.out_dim());
        let start = self.slow.head_start();
        Some((0..=f).map(|i| start + i * o + (o - 1)).collect())
    }

    pub fn default_mode(&self) -> RecursionMode {
        if self.variant.hqkan_fast() {
            RecursionMode::Folded
        } else {
            RecursionMode::Direct
        }
    }

    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        let (slow, fast) = p.split_at_mut(self.slow.param_count());
        self.slow.init_params(rng, slow);
        self.fast.init_params(rng, fast);
        p
    }

    fn steps(&self, xs: &[f64]) -> Result<usize, FastWeightError> {
        let d = self.dims.in_dim;
        if xs.is_empty() {
            return Err(FastWeightError::EmptySequence);
        }
        if xs.len() % d != 0 {
            return Err(FastWeightError::ShapeMismatch {
                expected: xs.len().div_ceil(d) * d,
                got: xs.len(),
            });
        }
        Ok(xs.len() / d)
    }

    /// Tape forward of one sequence `xs` (flat `[T, in]`); returns `y_T` as `[1, out]`.
    pub fn forward_on_tape(
        &self,
        tape: &mut Tape,
        params: Var,
        xs: &[f64],
    ) -> Result<Var, FastWeightError> {
        self.forward_on_tape_with(tape, params, xs, self.default_mode())
    }

    pub fn forward_on_tape_with(
        &self,
        tape: &mut Tape,
        params: Var,
        xs: &[f64],
        mode: RecursionMode,
    ) -> Result<Var, FastWeightError> {
        check_len(self.param_count(), tape.value(params).len())?;
        if mode == RecursionMode::Folded && !self.variant.hqkan_fast() {
            return Err(FastWeightError::FoldUnsupported);
        }
        let t = self.steps(xs)?;
        let d = self.dims.in_dim;
        let slow_p = tape.slice(params, 0, self.slow.param_count())?;
        let fast_p = tape.slice(params, self.slow.param_count(), self.fast.param_count())?;
        let x_last = constant_matrix(tape, 1, d, xs[(t - 1) * d..].to_vec())?;
        let state = if t == 1 {
            fast_p
        } else {
            let r = t - 1;
            let hist = constant_matrix(tape, r, d, xs[..r * d].to_vec())?;
            match mode {
                RecursionMode::Direct => self.direct_state(tape, slow_p, fast_p, hist)?,
                RecursionMode::Folded => self.folded_state(tape, slow_p, fast_p, hist, r)?,
            }
        };
        self.fast.forward_on_tape(tape, state, x_last)
    }

    fn direct_state(
        &self,
        tape: &mut Tape,
        slow_p: Var,
        fast_p: Var,
        hist: Var,
    ) -> Result<Var, FastWeightError> {
        let heads = self.slow.forward_on_tape(tape, slow_p, hist)?;
        let u = self.fast.update_width();
        let upd = if self.variant.gated() {
            tape.slice_cols(heads, 0, u)?
        } else {
            heads
        };
        let deltas = match self.fast {
            FastNet::Linear { in_dim, out_dim } => outer_update(tape, upd, in_dim, out_dim)?,
            FastNet::Hqkan(_) => upd,
        };
        if self.variant.gated() {
            let logits = tape.slice_cols(heads, u, 1)?;
            let gates = tape.sigmoid(logits)?;
            gated_recursion(tape, fast_p, deltas, gates)
        } else {
            additive_recursion(tape, fast_p, deltas)
        }
    }

    fn folded_state(
        &self,
        tape: &mut Tape,
        slow_p: Var,
        fast_p: Var,
        hist: Var,
        rows: usize,
    ) -> Result<Var, FastWeightError> {
        let f = self.slow.feature_dim();
        let p = self.fast.param_count();
        let h = self.slow.trunk_on_tape(tape, slow_p, hist)?;
        let ones = constant_matrix(tape, rows, 1, vec![1.0; rows])?;
        let hext = tape.concat_cols(h, ones)?;
        let head = self.slow.head_matrix_on_tape(tape, slow_p)?;
        let (carried, z) = if self.variant.gated() {
            let gcol = tape.slice_cols(head, p, 1)?;
            let logits = tape.matmul(hext, gcol)?;
            let gates = tape.sigmoid(logits)?;
            let zero = tape.constant(Tensor::vector(vec![0.0; f + 1]));
            let z = gated_recursion(tape, zero, hext, gates)?;
            let beta0 = tape.prod(gates)?;
            (tape.mul(beta0, fast_p)?, tape.reshape(z, &[1, f + 1])?)
        } else {
            let sum_rows = constant_matrix(tape, 1, rows, vec![1.0; rows])?;
            (fast_p, tape.matmul(sum_rows, hext)?)
        };
        let update_head = if self.variant.gated() {
            tape.slice_cols(head, 0, p)?
        } else {
            head
        };
        let contrib = tape.matmul(z, update_head)?;
        let contrib = tape.reshape(contrib, &[p])?;
        Ok(tape.add(carried, contrib)?)
    }

    /// Plain evaluation of the slow programmer: updates `Δ_t` (flat `[r, P]`)
    /// and gates for the first `r` inputs.
    fn proposals(
        &self,
        params: &[f64],
        xs: &[f64],
        rows: usize,
    ) -> Result<(Vec<f64>, Vec<f64>), FastWeightError> {
        let d = self.dims.in_dim;
        let slow_p = &params[self.slow_range()];
        let u = self.fast.update_width();
        let mut deltas = Vec::with_capacity(rows * self.fast.param_count());
        let mut gates = Vec::with_capacity(rows);
        for x in xs[..rows * d].chunks_exact(d) {
            let head = self.slow.forward(slow_p, x)?;
            match self.fast {
                FastNet::Linear { in_dim, out_dim } => deltas.extend(linear_delta(
                    &head[..in_dim],
                    &head[in_dim..in_dim + out_dim],
                    &head[in_dim + out_dim..u],
                )?),
                FastNet::Hqkan(_) => deltas.extend_from_slice(&head[..u]),
            }
            if self.variant.gated() {
                gates.push(sigmoid(head[u]));
            }
        }
        Ok((deltas, gates))
    }

    /// Fast parameters `W_T` used to emit `y_T`, computed with a prefix scan
    /// on `workers` threads (1 = sequential).
    pub fn final_fast_state(
        &self,
        params: &[f64],
        xs: &[f64],
        workers: usize,
    ) -> Result<Vec<f64>, FastWeightError> {
        check_len(self.param_count(), params.len())?;
        let t = self.steps(xs)?;
        let w1 = &params[self.fast_range()];
        if t == 1 {
            return Ok(w1.to_vec());
        }
        let pairs = self.pairs(params, xs, t - 1)?;
        let traj = parallel_scan(&pairs, w1, workers)?;
        Ok(traj.last().map_or_else(|| w1.to_vec(), <[f64]>::to_vec))
    }

    fn pairs(&self, params: &[f64], xs: &[f64], rows: usize) -> Result<PairSequence, FastWeightError> {
        let p = self.fast.param_count();
        let (deltas, gates) = self.proposals(params, xs, rows)?;
        let mut pairs = PairSequence::with_capacity(p, rows);
        for (k, delta) in deltas.chunks_exact(p).enumerate() {
            if self.variant.gated() {
                pairs.push_gated(gates[k], delta)?;
            } else {
                pairs.push(1.0, delta)?;
            }
        }
        Ok(pairs)
    }

    /// `y_T` for the sequence `xs`.
    pub fn predict(&self, params: &[f64], xs: &[f64]) -> Result<Vec<f64>, FastWeightError> {
        self.predict_with_workers(params, xs, 1)
    }

    pub fn predict_with_workers(
        &self,
        params: &[f64],
        xs: &[f64],
        workers: usize,
    ) -> Result<Vec<f64>, FastWeightError> {
        let w = self.final_fast_state(params, xs, workers)?;
        let t = self.steps(xs)?;
        self.fast.forward(&w, &xs[(t - 1) * self.dims.in_dim..])
    }

    /// `y_T` with the fast programmer's DARUAN expectations estimated from
    /// `shots` measurements; the slow programmer and recursion stay exact.
    pub fn predict_sampled<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        xs: &[f64],
        shots: u64,
        rng: &mut R,
    ) -> Result<Vec<f64>, FastWeightError> {
        let w = self.final_fast_state(params, xs, 1)?;
        let t = self.steps(xs)?;
        self.fast
            .forward_sampled(&w, &xs[(t - 1) * self.dims.in_dim..], shots, rng)
    }

    /// Per-step gates and norms of the recursion driving `y_T`.
    pub fn trajectory(&self, params: &[f64], xs: &[f64]) -> Result<TrajectoryReport, FastWeightError> {
        check_len(self.param_count(), params.len())?;
        let t = self.steps(xs)?;
        let w1 = &params[self.fast_range()];
        let r = t - 1;
        let (deltas, gates) = self.proposals(params, xs, r)?;
        let p = self.fast.param_count();
        let mut rows = Vec::with_capacity(r);
        let mut w = w1.to_vec();
        for (k, delta) in deltas.chunks_exact(p).enumerate() {
            let gate = gates.get(k).copied();
            rows.push(TrajectoryRow {
                t: k + 1,
                gate,
                w_norm: sup_norm(&w),
                delta_norm: sup_norm(delta),
            });
            w = match gate {
                Some(g) => super::gated_step(&w, delta, g)?,
                None => super::ungated_step(&w, delta)?,
            };
        }
        let beta = if self.variant.gated() {
            Some(beta_coefficients(&gates)?)
        } else {
            None
        };
        Ok(TrajectoryReport {
            variant: self.variant,
            rows,
            beta,
            final_norm: sup_norm(&w),
        })
    }
}

/// One step of the fast-weight recursion, `t = 1 … T−1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: usize,
    /// `None` for ungated variants.
    pub gate: Option<f64>,
    /// `‖W_t‖_∞` before the update at step `t`.
    pub w_norm: f64,
    pub delta_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub variant: Variant,
    pub rows: Vec<TrajectoryRow>,
    /// `β_{0,T−1} … β_{T−1,T−1}` (gated variants only).
    pub beta: Option<Vec<f64>>,
    /// `‖W_T‖_∞`.
    pub final_norm: f64,
}

impl TrajectoryReport {
    /// Columns `t, g_t, w_inf, delta_inf`; the gate is blank for ungated runs.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,g_t,w_inf,delta_inf")?;
        for r in &self.rows {
            let g = r.gate.map(|g| g.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", r.t, g, r.w_norm, r.delta_norm)?;
        }
        Ok(())
    }

    pub fn beta_json(&self) -> serde_json::Value {
        serde_json::json!({
            "variant": self.variant,
            "steps": self.rows.len(),
            "beta": self.beta,
            "w_final_inf": self.final_norm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{assert_grad_matches, central_diff};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_dims() -> ModelDims {
        ModelDims {
            in_dim: 1,
            out_dim: 2,
            mlp_hidden: 4,
            slow_latent: 2,
            slow_layers: 2,
            fast_latent: 2,
            fast_layers: 2,
        }
    }

    fn window(t: usize) -> Vec<f64> {
        (0..t).map(|i| (0.7 * i as f64).sin()).collect()
    }

    fn tape_output(m: &FastWeightModel, p: &[f64], xs: &[f64], mode: RecursionMode) -> Vec<f64> {
        let mut tape = Tape::new();
        let pv = tape.leaf(Tensor::vector(p.to_vec()), true);
        let y = m.forward_on_tape_with(&mut tape, pv, xs, mode).unwrap();
        tape.value(y).data().to_vec()
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("fwp-ungated".parse::<Variant>().unwrap(), Variant::Fwp);
        assert!("qfwp".parse::<Variant>().is_err());
        assert_eq!(
            serde_json::to_string(&Variant::GqkanQkanfwp).unwrap(),
            "\"gqkan-qkanfwp\""
        );
    }

    #[test]
    fn tape_and_scan_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let xs = window(9);
        for v in Variant::ALL {
            let m = FastWeightModel::new(v, small_dims());
            let p = m.init_params(&mut rng);
            let plain = m.predict(&p, &xs).unwrap();
            let par = m.predict_with_workers(&p, &xs, 3).unwrap();
            let mut modes = vec![RecursionMode::Direct];
            if v.hqkan_fast() {
                modes.push(RecursionMode::Folded);
            }
            for mode in modes {
                let y = tape_output(&m, &p, &xs, mode);
                for ((a, b), c) in y.iter().zip(&plain).zip(&par) {
                    assert!((a - b).abs() < 1e-12, "{v} {mode:?}: {a} vs {b}");
                    assert!((b - c).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_step_uses_initial_fast_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for v in Variant::ALL {
            let m = FastWeightModel::new(v, small_dims());
            let mut p = m.init_params(&mut rng);
            let y = m.predict(&p, &[0.4]).unwrap();
            let direct = m.fast().forward(&p[m.fast_range()], &[0.4]).unwrap();
            assert_eq!(y, direct);
            // the slow programmer is irrelevant at T = 1
            p[0] += 1.0;
            assert_eq!(m.predict(&p, &[0.4]).unwrap(), y);
        }
    }

    #[test]
    fn saturated_gate_is_a_static_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for v in Variant::ALL.into_iter().filter(|v| v.gated()) {
            let m = FastWeightModel::new(v, small_dims());
            let mut p = m.init_params(&mut rng);
            let idx = m.gate_param_indices().unwrap();
            let (bias, weights) = idx.split_last().unwrap();
            weights.iter().for_each(|&i| p[i] = 0.0);
            p[*bias] = 60.0;
            let xs = window(7);
            let y = m.predict(&p, &xs).unwrap();
            let fixed = m.fast().forward(&p[m.fast_range()], &xs[6..]).unwrap();
            assert_eq!(y, fixed, "{v}");
            let traj = m.trajectory(&p, &xs).unwrap();
            assert_eq!(traj.beta.unwrap()[0], 1.0);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xs = window(5);
        for v in Variant::ALL {
            let m = FastWeightModel::new(v, small_dims());
            let p = m.init_params(&mut rng);
            let mut tape = Tape::new();
            let pv = tape.leaf(Tensor::vector(p.clone()), true);
            let y = m.forward_on_tape(&mut tape, pv, &xs).unwrap();
            let sq = tape.mul(y, y).unwrap();
            let loss = tape.sum(sq).unwrap();
            tape.backward(loss).unwrap();
            let numeric = central_diff(&p, 1e-5, |q| {
                m.predict(q, &xs).unwrap().iter().map(|y| y * y).sum()
            });
            assert_grad_matches(tape.grad(pv).unwrap(), &numeric, 1e-6);
        }
    }

    #[test]
    fn trajectory_export() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = FastWeightModel::new(Variant::GqkanQkanfwp, small_dims());
        let p = m.init_params(&mut rng);
        let traj = m.trajectory(&p, &window(6)).unwrap();
        assert_eq!(traj.rows.len(), 5);
        let beta = traj.beta.as_ref().unwrap();
        assert_eq!(beta.len(), 6);
        assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,g_t,w_inf,delta_inf\n1,"));
        assert_eq!(traj.beta_json()["steps"], 5);

        let ungated = FastWeightModel::new(Variant::Fwp, small_dims());
        let p = ungated.init_params(&mut rng);
        let traj = ungated.trajectory(&p, &window(4)).unwrap();
        assert!(traj.beta.is_none());
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap().starts_with("1,,"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = FastWeightModel::new(Variant::GFwp, small_dims());
        let p = vec![0.0; m.param_count()];
        assert_eq!(m.predict(&p, &[]), Err(FastWeightError::EmptySequence));
        assert!(m.predict(&p[1..], &[0.0]).is_err());
        let mut tape = Tape::new();
        let pv = tape.leaf(Tensor::vector(p), true);
        assert_eq!(
            m.forward_on_tape_with(&mut tape, pv, &[0.0, 1.0], RecursionMode::Folded),
            Err(FastWeightError::FoldUnsupported)
        );
    }

    #[test]
    fn parameter_counts() {
        let d = ModelDims::time_series();
        let m = FastWeightModel::new(Variant::GqkanQkanfwp, d);
        // fast HQKAN(1,2,1,2) = 47, slow HQKAN(1,2,48,2) = 4 + 40 + 144
        assert_eq!(m.fast().param_count(), 47);
        assert_eq!(m.param_count(), 47 + 188);
        let solar = FastWeightModel::new(Variant::GqkanQkanfwp, ModelDims::forecast(132));
        assert_eq!(solar.fast().param_count(), 2100);
        assert!((12_000..13_500).contains(&solar.param_count()));
    }
}
