//! Lindblad evolution of a damped Jaynes–Cummings system on a five-state
//! truncation `{|g,0⟩, |g,1⟩, |e,0⟩, |e,1⟩, |g,2⟩}`.

use super::{DataError, RawSeries};
use num_complex::Complex64 as C;
use serde_json::json;
use std::f64::consts::PI;

const DIM: usize = 5;
const G0: usize = 0;
const G1: usize = 1;
const E0: usize = 2;
const E1: usize = 3;
const G2: usize = 4;

type Mat = [[C; DIM]; DIM];

fn zero() -> Mat {
    [[C::new(0.0, 0.0); DIM]; DIM]
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut c = zero();
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            if aik == C::new(0.0, 0.0) {
                continue;
            }
            for j in 0..DIM {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn dagger(a: &Mat) -> Mat {
    let mut d = zero();
    for i in 0..DIM {
        for j in 0..DIM {
            d[j][i] = a[i][j].conj();
        }
    }
    d
}

/// A density matrix on the truncated JC space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: Mat,
}

impl DensityMatrix {
    /// `|g,1⟩⟨g,1|`.
    pub fn initial() -> Self {
        let mut m = zero();
        m[G1][G1] = C::new(1.0, 0.0);
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    pub fn entry(&self, i: usize, j: usize) -> C {
        self.entries[i][j]
    }

    pub fn trace(&self) -> C {
        (0..DIM).map(|i| self.entries[i][i]).sum()
    }

    /// `max |ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                worst = worst.max((self.entries[i][j] - self.entries[j][i].conj()).norm());
            }
        }
        worst
    }

    /// True when `ρ + tol·I` admits a Cholesky factorisation, i.e. every
    /// eigenvalue of (the Hermitian part of) `ρ` is at least `−tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        let mut a = self.entries;
        for i in 0..DIM {
            for j in 0..DIM {
                a[i][j] = 0.5 * (self.entries[i][j] + self.entries[j][i].conj());
            }
            a[i][i] += tol;
        }
        let mut l = zero();
        for j in 0..DIM {
            let mut d = a[j][j].re;
            for k in 0..j {
                d -= l[j][k].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let djj = d.sqrt();
            l[j][j] = C::new(djj, 0.0);
            for i in j + 1..DIM {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = s / djj;
            }
        }
        true
    }

    /// `⟨σ₊σ₋⟩ = ρ_{e0,e0} + ρ_{e1,e1}`.
    pub fn excitation(&self) -> f64 {
        self.entries[E0][E0].re + self.entries[E1][E1].re
    }
}

/// Physical constants and integrator resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JcParams {
    pub omega_c: f64,
    pub omega_q: f64,
    pub coupling: f64,
    pub gamma: f64,
    /// RK4 steps per output sample.
    pub substeps: usize,
}

impl Default for JcParams {
    fn default() -> Self {
        Self {
            omega_c: 2.0 * PI,
            omega_q: 2.0 * PI,
            coupling: PI,
            gamma: 0.05,
            substeps: 16,
        }
    }
}

struct Generator {
    h: Mat,
    c: Mat,
    c_dag: Mat,
    /// `½ C†C`
    half_cdc: Mat,
}

impl Generator {
    fn new(p: &JcParams) -> Self {
        let mut h = zero();
        // ω_c a†a + ω_q σ₊σ₋
        h[G1][G1] = C::new(p.omega_c, 0.0);
        h[G2][G2] = C::new(2.0 * p.omega_c, 0.0);
        h[E0][E0] = C::new(p.omega_q, 0.0);
        h[E1][E1] = C::new(p.omega_c + p.omega_q, 0.0);
        // g(σ₋a† + σ₊a)
        h[G1][E0] = C::new(p.coupling, 0.0);
        h[E0][G1] = C::new(p.coupling, 0.0);
        h[G2][E1] = C::new(p.coupling * 2f64.sqrt(), 0.0);
        h[E1][G2] = C::new(p.coupling * 2f64.sqrt(), 0.0);

        // C = √γ a
        let mut c = zero();
        let r = p.gamma.sqrt();
        c[G0][G1] = C::new(r, 0.0);
        c[E0][E1] = C::new(r, 0.0);
        c[G1][G2] = C::new(r * 2f64.sqrt(), 0.0);
        let c_dag = dagger(&c);
        let mut half_cdc = matmul(&c_dag, &c);
        half_cdc
            .iter_mut()
            .flatten()
            .for_each(|x| *x *= 0.5);
        Self {
            h,
            c,
            c_dag,
            half_cdc,
        }
    }

    /// `−i[H, ρ] + CρC† − ½{C†C, ρ}`
    fn rhs(&self, rho: &Mat) -> Mat {
        let hr = matmul(&self.h, rho);
        let rh = matmul(rho, &self.h);
        let jump = matmul(&matmul(&self.c, rho), &self.c_dag);
        let ar = matmul(&self.half_cdc, rho);
        let ra = matmul(rho, &self.half_cdc);
        let mi = C::new(0.0, -1.0);
        let mut out = zero();
        for i in 0..DIM {
            for j in 0..DIM {
                out[i][j] = mi * (hr[i][j] - rh[i][j]) + jump[i][j] - ar[i][j] - ra[i][j];
            }
        }
        out
    }

    fn rk4(&self, rho: &Mat, h: f64) -> Mat {
        let axpy = |a: &Mat, k: &Mat, s: f64| {
            let mut o = *a;
            for i in 0..DIM {
                for j in 0..DIM {
                    o[i][j] += k[i][j] * s;
                }
            }
            o
        };
        let k1 = self.rhs(rho);
        let k2 = self.rhs(&axpy(rho, &k1, 0.5 * h));
        let k3 = self.rhs(&axpy(rho, &k2, 0.5 * h));
        let k4 = self.rhs(&axpy(rho, &k3, h));
        let mut o = *rho;
        for i in 0..DIM {
            for j in 0..DIM {
                o[i][j] += (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]) * (h / 6.0);
            }
        }
        o
    }
}

/// `⟨σ₊σ₋⟩(t)` on `steps` samples of `[0, t_max]` with default constants.
pub fn jaynes_cummings(steps: usize, t_max: f64) -> Result<RawSeries, DataError> {
    jaynes_cummings_with(steps, t_max, JcParams::default(), |_, _| {})
}

/// As [`jaynes_cummings`], calling `inspect(k, ρ)` at every output sample.
pub fn jaynes_cummings_with(
    steps: usize,
    t_max: f64,
    p: JcParams,
    mut inspect: impl FnMut(usize, &DensityMatrix),
) -> Result<RawSeries, DataError> {
    if steps < 2 || !(t_max > 0.0) || p.substeps == 0 {
        return Err(DataError::InvalidParameter(format!(
            "steps = {steps}, t_max = {t_max}, substeps = {}",
            p.substeps
        )));
    }
    let gen = Generator::new(&p);
    let dt = t_max / (steps - 1) as f64;
    let h = dt / p.substeps as f64;
    let mut rho = DensityMatrix::initial();
    let mut v = Vec::with_capacity(steps);
    for k in 0..steps {
        let drift = (rho.trace() - C::new(1.0, 0.0)).norm();
        if drift > 1e-6 {
            return Err(DataError::TraceDrift { step: k, drift });
        }
        inspect(k, &rho);
        v.push(rho.excitation());
        if k + 1 < steps {
            for _ in 0..p.substeps {
                rho.entries = gen.rk4(&rho.entries, h);
            }
        }
    }
    let t = (0..steps).map(|k| k as f64 * dt).collect();
    let meta = json!({
        "generator": "jaynes_cummings",
        "omega_c": p.omega_c, "omega_q": p.omega_q, "g": p.coupling, "gamma": p.gamma,
        "steps": steps, "t_max": t_max, "substeps": p.substeps,
        "basis": ["g0", "g1", "e0", "e1", "g2"],
    });
    RawSeries::new("jc", t, v, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_in_ground_state() {
        let s = jaynes_cummings(50, 1.0).unwrap();
        assert_eq!(s.values()[0], 0.0);
    }

    #[test]
    fn closed_system_rabi_oscillation() {
        let p = JcParams {
            gamma: 0.0,
            ..JcParams::default()
        };
        let s = jaynes_cummings_with(600, 10.0, p, |_, _| {}).unwrap();
        for (t, v) in s.t().iter().zip(s.values()) {
            let want = (PI * t).sin().powi(2);
            assert!((v - want).abs() < 1e-6, "t = {t}: {v} vs {want}");
        }
    }

    #[test]
    fn physicality_is_preserved() {
        let mut worst_trace = 0.0f64;
        let mut worst_herm = 0.0f64;
        let mut all_positive = true;
        jaynes_cummings_with(300, 5.0, JcParams::default(), |_, rho| {
            worst_trace = worst_trace.max((rho.trace() - C::new(1.0, 0.0)).norm());
            worst_herm = worst_herm.max(rho.hermiticity_error());
            all_positive &= rho.is_positive(1e-8);
        })
        .unwrap();
        assert!(worst_trace < 1e-8);
        assert!(worst_herm < 1e-10);
        assert!(all_positive);
    }

    #[test]
    fn positivity_check_detects_negative_eigenvalue() {
        let mut rho = DensityMatrix::initial();
        rho.entries[G0][G0] = C::new(-1e-3, 0.0);
        assert!(!rho.is_positive(1e-8));
        assert!(DensityMatrix::initial().is_positive(1e-8));
    }
}
