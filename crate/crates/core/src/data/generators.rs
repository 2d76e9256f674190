use super::{DataError, RawSeries};
use serde_json::json;
use std::f64::consts::PI;

/// Pendulum constants and integrator resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShmParams {
    pub gravity: f64,
    pub damping: f64,
    pub length: f64,
    pub mass: f64,
    pub theta0: f64,
    pub omega0: f64,
    /// RK4 steps per output sample.
    pub substeps: usize,
}

impl Default for ShmParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            damping: 0.15,
            length: 1.0,
            mass: 1.0,
            theta0: 0.0,
            omega0: 3.0,
            substeps: 8,
        }
    }
}

/// Angular velocity of the damped pendulum
/// `θ'' + (b/m) θ' + (g/L) sin θ = 0`, sampled every `dt` from `t = 0`.
pub fn damped_shm(points: usize, dt: f64) -> Result<RawSeries, DataError> {
    damped_shm_with(points, dt, ShmParams::default())
}

pub fn damped_shm_with(points: usize, dt: f64, p: ShmParams) -> Result<RawSeries, DataError> {
    if points < 2 {
        return Err(DataError::InvalidParameter("need at least 2 points".into()));
    }
    if !(dt > 0.0) || p.substeps == 0 {
        return Err(DataError::InvalidParameter(format!(
            "dt = {dt}, substeps = {}",
            p.substeps
        )));
    }
    let rhs = |s: [f64; 2]| {
        [
            s[1],
            -p.damping / p.mass * s[1] - p.gravity / p.length * s[0].sin(),
        ]
    };
    let h = dt / p.substeps as f64;
    let mut s = [p.theta0, p.omega0];
    let mut v = Vec::with_capacity(points);
    for _ in 0..points {
        v.push(s[1]);
        for _ in 0..p.substeps {
            let k1 = rhs(s);
            let k2 = rhs([s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]]);
            let k3 = rhs([s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]]);
            let k4 = rhs([s[0] + h * k3[0], s[1] + h * k3[1]]);
            for i in 0..2 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    let t = (0..points).map(|k| k as f64 * dt).collect();
    let meta = json!({
        "generator": "damped_shm",
        "g": p.gravity, "b": p.damping, "L": p.length, "m": p.mass,
        "theta0": p.theta0, "omega0": p.omega0,
        "points": points, "dt": dt, "substeps": p.substeps,
    });
    RawSeries::new("shm", t, v, meta)
}

/// Double-double arithmetic: an unevaluated sum `hi + lo`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi))
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let p = q1 * d;
        let pe = q1.mul_add(d, -p);
        let (s, e) = two_sum(self.hi, -p);
        let q2 = (s + (e - pe + self.lo)) / d;
        quick_two_sum(q1, q2)
    }

    fn square(x: f64) -> Dd {
        let p = x * x;
        Dd {
            hi: p,
            lo: x.mul_add(x, -p),
        }
    }
}

/// `J_n(x)` from its power series, summed in double-double precision so the
/// alternating terms do not cancel away the result for `|x|` up to ~40.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let q = x / 2.0;
    let mut term = Dd::ONE;
    for k in 1..=n {
        term = term.mul(Dd { hi: q, lo: 0.0 }).div_f64(k as f64);
    }
    let step = Dd::square(q);
    let step = Dd {
        hi: -step.hi,
        lo: -step.lo,
    };
    let mut sum = Dd::ZERO;
    for m in 0..1000u32 {
        sum = sum.add(term);
        let past_peak = f64::from(m) > q.abs();
        if past_peak && term.hi.abs() < 1e-16 {
            break;
        }
        let denom = f64::from(m + 1) * f64::from(m + n + 1);
        term = term.mul(step).div_f64(denom);
    }
    sum.hi + sum.lo
}

/// `J₂(x)` on `points` evenly spaced samples of `[0, x_max]`.
pub fn bessel_series(points: usize, x_max: f64) -> Result<RawSeries, DataError> {
    if points < 2 || !(x_max > 0.0) {
        return Err(DataError::InvalidParameter(format!(
            "points = {points}, x_max = {x_max}"
        )));
    }
    let t: Vec<f64> = (0..points)
        .map(|k| x_max * k as f64 / (points - 1) as f64)
        .collect();
    let v = t.iter().map(|&x| bessel_j(2, x)).collect();
    let meta = json!({"generator": "bessel_j", "order": 2, "points": points, "x_max": x_max});
    RawSeries::new("bessel", t, v, meta)
}

/// `u_t` for the NARMA benchmarks.
pub fn narma_input(t: usize) -> f64 {
    let t = t as f64;
    let [a, b, c, period] = NARMA_INPUT;
    0.1 * ((2.0 * PI * a * t / period).sin()
        * (2.0 * PI * b * t / period).sin()
        * (2.0 * PI * c * t / period).sin()
        + 1.0)
}

/// Frequencies and period of the NARMA input signal.
pub const NARMA_INPUT: [f64; 4] = [2.11, 3.73, 4.11, 100.0];

/// NARMA-`order` output `y_0 … y_{len−1}` with `y_t = 0` for `t ≤ order`.
pub fn narma(order: usize, len: usize) -> Result<RawSeries, DataError> {
    narma_with_input(order, len, narma_input)
}

pub(crate) fn narma_with_input(
    order: usize,
    len: usize,
    u: impl Fn(usize) -> f64,
) -> Result<RawSeries, DataError> {
    if order == 0 || len <= order + 1 {
        return Err(DataError::InvalidParameter(format!(
            "order {order} with length {len}"
        )));
    }
    let (alpha, beta, gamma, delta) = (0.3, 0.05, 1.5, 0.1);
    let mut y = vec![0.0; len];
    for t in order..len - 1 {
        let window: f64 = y[t + 1 - order..=t].iter().sum();
        y[t + 1] = alpha * y[t] + beta * y[t] * window + gamma * u(t + 1 - order) * u(t) + delta;
    }
    let t = (0..len).map(|k| k as f64).collect();
    let meta = json!({
        "generator": "narma", "order": order, "len": len,
        "alpha": alpha, "beta": beta, "gamma": gamma, "delta": delta,
        "input": NARMA_INPUT,
    });
    RawSeries::new(format!("narma{order}"), t, y, meta)
}

/// Decaying pulse train `Σ_{n=0}^{10} exp(−10(t−2n)²)·exp(−t/16)`.
pub fn dqc(points: usize, t0: f64, t1: f64) -> Result<RawSeries, DataError> {
    if points < 2 || !(t1 > t0) {
        return Err(DataError::InvalidParameter(format!(
            "points = {points}, range [{t0}, {t1}]"
        )));
    }
    let t: Vec<f64> = (0..points)
        .map(|k| t0 + (t1 - t0) * k as f64 / (points - 1) as f64)
        .collect();
    let v = t.iter().map(|&t| dqc_value(t)).collect();
    let meta = json!({"generator": "dqc", "points": points, "t0": t0, "t1": t1, "pulses": 11});
    RawSeries::new("dqc", t, v, meta)
}

fn dqc_value(t: f64) -> f64 {
    (0..=10)
        .map(|n| (-10.0 * (t - 2.0 * n as f64).powi(2)).exp())
        .sum::<f64>()
        * (-t / 16.0).exp()
}
