//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the run
//! fails if any criterion fails. Pass criterion numbers as arguments to run
//! a subset, e.g. `cargo test --test acceptance -- 1 2 11`.

use gfwp_core::daruan::DaruanEdge;
use gfwp_core::data::{
    bessel_j, damped_shm_with, jaynes_cummings_with, load_silso, narma, narma_input, Dataset,
    JcParams, ShmParams,
};
use gfwp_core::fastweight::{
    backward_through_time, beta_coefficients, gated_states, gated_step, ungated_step,
};
use gfwp_core::scan::{
    compose, parallel_scan, scan_bench, sequential_scaling, AffinePair, PairSequence, ScanMode,
};
use gfwp_core::stats::loglog_fit;
use gfwp_core::train::{
    evaluate, prepare, sample_gradient, shot_sweep, train, LossKind, MetricsReport, Prepared,
    Splits, Window, WindowSpec,
};
use gfwp_core::{FastWeightModel, ModelDims, NormRange, TrainConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, a: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-a..a)).collect()
}

fn random_pair(rng: &mut ChaCha8Rng, dim: usize) -> AffinePair {
    AffinePair::new(rng.gen_range(0.0..1.0), random_vec(rng, dim, 1.0))
}

fn associativity() -> Outcome {
    const TRIPLES: usize = 100_000;
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..TRIPLES {
        let dim = rng.gen_range(1..=4);
        let (a, b, c) = (random_pair(&mut rng, dim), random_pair(&mut rng, dim), random_pair(&mut rng, dim));
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        worst = worst.max((left.scale - right.scale).abs());
        for (l, r) in left.offset.iter().zip(&right.offset) {
            worst = worst.max((l - r).abs());
        }
    }
    check(worst <= TOL, format!("{TRIPLES} triples, max deviation {worst:.2e} (tol {TOL:.0e})"))
}

fn scan_equivalence() -> Outcome {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for t in [1usize, 2, 3, 100, 4096] {
        for dim in [1usize, 3] {
            let w1 = random_vec(&mut rng, dim, 2.0);
            let mut pairs = PairSequence::with_capacity(dim, t);
            let mut iterated = Vec::with_capacity(t * dim);
            let mut w = w1.clone();
            for _ in 0..t {
                let g = rng.gen_range(0.0..1.0);
                let delta = random_vec(&mut rng, dim, 3.0);
                pairs.push_gated(g, &delta).unwrap();
                w = gated_step(&w, &delta, g).unwrap();
                iterated.extend_from_slice(&w);
            }
            let seq = sequential_scan_states(&pairs, &w1);
            worst = worst.max(max_rel(&seq, &iterated));
            for p in [1usize, 2, 4, 8] {
                let par = parallel_scan(&pairs, &w1, p).unwrap();
                worst = worst.max(max_rel(par.states_flat(), &iterated));
                cases += 1;
            }
        }
    }
    check(worst <= TOL, format!("{cases} (T, p, dim) cases, max relative deviation {worst:.2e} (tol {TOL:.0e})"))
}

fn sequential_scan_states(pairs: &PairSequence, w1: &[f64]) -> Vec<f64> {
    gfwp_core::scan::sequential_scan(pairs, w1).unwrap().states_flat().to_vec()
}

fn beta_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut sum_err, mut kernel_err, mut sens_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut negative = false;
    for trial in 0..200 {
        let t = 1 + trial % 60;
        let gates: Vec<f64> = (0..t).map(|_| rng.gen_range(0.0..1.0)).collect();
        let beta = beta_coefficients(&gates).unwrap();
        negative |= beta.iter().any(|&b| b < 0.0);
        sum_err = sum_err.max((beta.iter().sum::<f64>() - 1.0).abs());

        let g = rng.gen_range(0.0..1.0);
        let constant = beta_coefficients(&vec![g; t]).unwrap();
        kernel_err = kernel_err.max((constant[0] - g.powi(t as i32)).abs());
        for k in 1..=t {
            let expected = (1.0 - g) * g.powi((t - k) as i32);
            kernel_err = kernel_err.max((constant[k] - expected).abs());
        }

        let dim = 3;
        let w1 = random_vec(&mut rng, dim, 1.0);
        let deltas = random_vec(&mut rng, t * dim, 1.0);
        let c = random_vec(&mut rng, dim, 1.0);
        let (states, _) = gated_states(&w1, &deltas, &gates).unwrap();
        let grads = backward_through_time(&states, &deltas, &gates, &c).unwrap();
        for k in 0..t {
            for i in 0..dim {
                sens_err = sens_err.max((grads.deltas[k * dim + i] - beta[k + 1] * c[i]).abs());
            }
        }
        for i in 0..dim {
            sens_err = sens_err.max((grads.init[i] - beta[0] * c[i]).abs());
        }
    }
    check(
        !negative && sum_err <= 1e-12 && kernel_err <= 1e-12 && sens_err <= 1e-10,
        format!(
            "nonnegative {}, |Σβ−1| {sum_err:.1e} (tol 1e-12), constant-gate kernel {kernel_err:.1e}, \
             BPTT sensitivity {sens_err:.1e} (tol 1e-10)",
            !negative
        ),
    )
}

fn convex_hull_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    for _ in 0..1000 {
        let dim = rng.gen_range(1..=6);
        let t = rng.gen_range(1..=200);
        let scale = rng.gen_range(0.1..5.0);
        let mut w = random_vec(&mut rng, dim, scale);
        let mut bound = inf_norm(&w);
        for _ in 0..t {
            let scale = rng.gen_range(0.1..5.0);
            let delta = random_vec(&mut rng, dim, scale);
            bound = bound.max(inf_norm(&delta));
            w = gated_step(&w, &delta, rng.gen_range(0.0..1.0)).unwrap();
            if inf_norm(&w) > bound * (1.0 + 1e-15) {
                violations += 1;
            }
        }
    }
    let mut w = vec![0.0; 2];
    let delta = [1.0, -0.5];
    let mut linear = true;
    for t in 1..=1000 {
        w = ungated_step(&w, &delta).unwrap();
        linear &= (inf_norm(&w) - t as f64).abs() < 1e-9;
    }
    check(
        violations == 0 && linear,
        format!("1000 gated trajectories, {violations} bound violations; ungated ‖W_{{t+1}}‖∞ = t·‖Δ‖∞: {linear}"),
    )
}

fn gradient_audit() -> Outcome {
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    const SHIFT_TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let window = Window {
        start: 0,
        input: random_vec(&mut rng, 8, 1.0),
        target: vec![0.3],
    };
    let mut details = Vec::new();
    let mut ok = true;
    for variant in Variant::ALL {
        let model = FastWeightModel::new(variant, ModelDims::time_series());
        let params = model.init_params(&mut rng);
        let (_, grad) = sample_gradient(&model, &params, &window, LossKind::Mse, 1.0).unwrap();
        let loss_at = |p: &[f64]| sample_gradient(&model, p, &window, LossKind::Mse, 1.0).unwrap().0;
        let mut worst = 0.0f64;
        let mut p = params.clone();
        for i in 0..params.len() {
            p[i] = params[i] + H;
            let up = loss_at(&p);
            p[i] = params[i] - H;
            let down = loss_at(&p);
            p[i] = params[i];
            let numeric = (up - down) / (2.0 * H);
            let err = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
        ok &= worst <= TOL;
        details.push(format!("{variant} {} params rel {worst:.1e}", params.len()));
    }

    // Parameter-shift rule on every rotation angle: ∂⟨Z⟩/∂θ = (⟨Z⟩(θ+π/2) − ⟨Z⟩(θ−π/2)) / 2.
    let mut shift_worst = 0.0f64;
    for layers in 1..=4 {
        for _ in 0..25 {
            let edge = DaruanEdge::random(&mut rng, layers);
            let x = rng.gen_range(-1.0..1.0);
            let analytic = edge.grad(x, 1.0).unwrap().params;
            let base = edge.to_params();
            for l in 0..layers {
                for offset in [1usize, 2, 3] {
                    let idx = 4 * l + offset;
                    let at = |shift: f64| {
                        let mut p = base.clone();
                        p[idx] += shift;
                        DaruanEdge::from_params(&p, layers).unwrap().expectation(x).unwrap()
                    };
                    let shifted = edge.out_scale * (at(PI / 2.0) - at(-PI / 2.0)) / 2.0;
                    shift_worst = shift_worst.max((analytic[idx] - shifted).abs());
                }
            }
        }
    }
    ok &= shift_worst <= SHIFT_TOL;
    details.push(format!("parameter shift {shift_worst:.1e} (tol {SHIFT_TOL:.0e})"));
    check(ok, format!("{} (tol {TOL:.0e})", details.join(", ")))
}

fn narma_reference(order: usize, len: usize) -> Vec<f64> {
    use std::collections::VecDeque;
    let mut out = vec![0.0; order + 1];
    let mut recent: VecDeque<f64> = std::iter::repeat(0.0).take(order).collect();
    let mut sum = 0.0;
    for t in order..len - 1 {
        let y = out[t];
        let next = 0.3 * y + 0.05 * y * sum + 1.5 * narma_input(t + 1 - order) * narma_input(t) + 0.1;
        out.push(next);
        sum += next - recent.pop_front().unwrap();
        recent.push_back(next);
    }
    out
}

fn dataset_oracles() -> Outcome {
    let mut worst_bessel = 0.0f64;
    for k in 1..=600 {
        let x = 0.05 * k as f64;
        let lhs = bessel_j(1, x) + bessel_j(3, x);
        let rhs = 4.0 / x * bessel_j(2, x);
        worst_bessel = worst_bessel.max((lhs - rhs).abs());
    }

    let mut worst_narma = 0.0f64;
    for order in [5usize, 10] {
        let s = narma(order, 300).unwrap();
        let r = narma_reference(order, 300);
        worst_narma = worst_narma.max(max_rel(s.values(), &r));
    }

    let closed = JcParams {
        gamma: 0.0,
        ..JcParams::default()
    };
    let rabi = jaynes_cummings_with(501, 5.0, closed, |_, _| {}).unwrap();
    let worst_rabi = rabi
        .t()
        .iter()
        .zip(rabi.values())
        .map(|(t, v)| (v - (closed.coupling * t).sin().powi(2)).abs())
        .fold(0.0, f64::max);

    let mut worst_trace = 0.0f64;
    jaynes_cummings_with(3000, 50.0, JcParams::default(), |_, rho| {
        worst_trace = worst_trace.max((rho.trace().re - 1.0).abs().max(rho.trace().im.abs()));
    })
    .unwrap();

    let shm = |substeps| {
        let p = ShmParams {
            substeps,
            ..ShmParams::default()
        };
        damped_shm_with(1000, 20.0 / 999.0, p).unwrap().values().to_vec()
    };
    let (coarse, fine, finest) = (shm(4), shm(8), shm(16));
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let (e1, e2) = (diff(&coarse, &fine), diff(&fine, &finest));
    let ratio = e1 / e2;
    let rk4_ok = e2 < 1e-6 && (8.0..=32.0).contains(&ratio);

    check(
        worst_bessel <= 1e-10 && worst_narma <= 1e-12 && worst_rabi <= 1e-6 && worst_trace <= 1e-8 && rk4_ok,
        format!(
            "Bessel recurrence {worst_bessel:.1e}, NARMA dual {worst_narma:.1e}, Rabi {worst_rabi:.1e}, \
             trace drift {worst_trace:.1e}, RK4 halving err {e2:.1e} ratio {ratio:.1}"
        ),
    )
}

fn series(dataset: Dataset, window: usize) -> Prepared {
    let s = dataset.generate().unwrap();
    prepare(&s, WindowSpec::new(window, 1).unwrap(), Splits::HOLDOUT, NormRange::Symmetric).unwrap()
}

/// Test-set MSE for each seed; diverged runs count as infinite.
fn seed_mse(variant: Variant, data: &Prepared, dims: ModelDims, cfg: &TrainConfig, seeds: u64) -> Vec<f64> {
    let model = FastWeightModel::new(variant, dims);
    (0..seeds)
        .map(|seed| {
            let cfg = TrainConfig {
                seed,
                threads: threads(),
                ..cfg.clone()
            };
            match train(&model, data, &cfg) {
                Ok(run) => evaluate(&model, &run.params, &data.test, &data.normalizer, None, seed, cfg.threads)
                    .unwrap()
                    .scaled_mse,
                Err(e) if e.is_numerical() => f64::INFINITY,
                Err(e) => panic!("{variant}: {e}"),
            }
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt_all(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join(" ")
}

fn shm_gqkan() -> Outcome {
    let data = series(Dataset::Shm, 16);
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let mse = seed_mse(Variant::GqkanQkanfwp, &data, ModelDims::time_series(), &cfg, 5);
    let m = mean(&mse);
    check(m <= 1e-3, format!("mean test MSE {m:.2e} (≤ 1e-3) over seeds [{}]", fmt_all(&mse)))
}

fn narma_gqkanfwp() -> Outcome {
    let data = series(Dataset::Narma5, 16);
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let mse = seed_mse(Variant::GQkanfwp, &data, ModelDims::time_series(), &cfg, 5);
    let m = mean(&mse);
    check(m <= 1e-3, format!("mean test MSE {m:.2e} (≤ 1e-3) over seeds [{}]", fmt_all(&mse)))
}

fn stability_ordering() -> Outcome {
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for dataset in [Dataset::Shm, Dataset::Jc] {
        let data = series(dataset, 64);
        let gated = mean(&seed_mse(Variant::GqkanQkanfwp, &data, ModelDims::time_series(), &cfg, 5));
        let ungated = mean(&seed_mse(Variant::Fwp, &data, ModelDims::time_series(), &cfg, 5));
        ok &= gated < ungated;
        parts.push(format!("{}: gated {gated:.2e} vs ungated {ungated:.2e}", dataset.name()));
    }
    check(ok, parts.join("; "))
}

fn solar() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sunspot_monthly_proxy.txt");
    let series = load_silso(&path).unwrap().series;
    let data = prepare(&series, WindowSpec::new(528, 132).unwrap(), Splits::TRAIN_VAL_TEST, NormRange::Unit).unwrap();
    let model = FastWeightModel::new(Variant::GqkanQkanfwp, ModelDims::forecast(132));
    let params = model.param_count();
    let metrics = (0..5)
        .map(|seed| {
            let cfg = TrainConfig {
                seed,
                threads: threads(),
                ..TrainConfig::forecasting()
            };
            let run = train(&model, &data, &cfg).unwrap();
            evaluate(&model, &run.params, &data.test, &data.normalizer, None, seed, cfg.threads).unwrap()
        })
        .collect();
    let r = MetricsReport::from_runs(metrics);
    let (mse, pae, pte) = (r.scaled_mse.mean, r.pae.mean, r.pte.mean);
    check(
        (11_000..=14_000).contains(&params) && mse <= 0.03 && pae <= 55.0 && pte <= 30.0,
        format!(
            "{params} params, scaled MSE {mse:.4} (≤ 0.03), PAE {pae:.2} (≤ 55), PTE {pte:.2} (≤ 30); \
             std {:.4}/{:.2}/{:.2}",
            r.scaled_mse.std, r.pae.std, r.pte.std
        ),
    )
}

fn shot_noise() -> Outcome {
    let data = series(Dataset::Shm, 16);
    let model = FastWeightModel::new(Variant::GqkanQkanfwp, ModelDims::time_series());
    let params = model.init_params(&mut ChaCha8Rng::seed_from_u64(11));
    let shots = [1u64, 16, 64, 256, 1024];
    let (points, slope) = shot_sweep(&model, &params, &data.test, &shots, 11).unwrap();
    let rel: Vec<f64> = points.iter().map(|p| p.relative_mse).collect();
    let last = rel[rel.len() - 1];
    let trend = rel.windows(2).filter(|w| w[1] > w[0]).count() == 0;
    check(
        (-1.3..=-0.7).contains(&slope) && last <= 5e-3 && trend,
        format!("relative MSE [{}], slope {slope:.3} (−1 ± 0.3), {last:.1e} at 1024 (≤ 5e-3)", fmt_all(&rel)),
    )
}

fn scan_scaling() -> Outcome {
    let ts: Vec<usize> = (12..=20).step_by(2).map(|k| 1usize << k).collect();
    let rows = scan_bench(&ts, &[1, 2, 4, 8], 4, 5);
    let (slope, r2) = sequential_scaling(&rows);
    let at = |mode: ScanMode, p: usize| {
        rows.iter()
            .find(|r| r.t == 1 << 20 && r.mode == mode && r.p == p)
            .map(|r| r.wall_ns as f64)
            .unwrap()
    };
    let speedup = at(ScanMode::Sequential, 1) / at(ScanMode::Parallel, 8);
    let cores = threads();
    let (speed_ok, speed_note) = if cores >= 8 {
        (speedup > 2.0, format!("speedup {speedup:.2}× at p=8 (> 2×)"))
    } else {
        (true, format!("speedup {speedup:.2}× at p=8 not assessed on {cores} core(s)"))
    };
    let xs: Vec<f64> = ts.iter().map(|&t| t as f64).collect();
    let counts: Vec<f64> = rows
        .iter()
        .filter(|r| r.mode == ScanMode::Parallel && r.p == 8)
        .map(|r| r.compose_count as f64)
        .collect();
    let (work_slope, _) = loglog_fit(&xs, &counts);
    check(
        (0.9..=1.1).contains(&slope) && speed_ok,
        format!("sequential slope {slope:.3} (1 ± 0.1, r² {r2:.4}), parallel work slope {work_slope:.3}; {speed_note}"),
    )
}

const CRITERIA: [(u32, &str, fn() -> Outcome); 12] = [
    (1, "associativity of compose", associativity),
    (2, "parallel scan equivalence", scan_equivalence),
    (3, "beta coefficients", beta_properties),
    (4, "convex-hull norm bound", convex_hull_bound),
    (5, "gradient audit", gradient_audit),
    (6, "dataset oracles", dataset_oracles),
    (7, "damped SHM, GQKAN-QKANFWP, N=16", shm_gqkan),
    (8, "NARMA5, G-QKANFWP, N=16", narma_gqkanfwp),
    (9, "gated vs ungated at N=64", stability_ordering),
    (10, "solar cycle forecast", solar),
    (11, "shot-noise convergence", shot_noise),
    (12, "scan scaling", scan_scaling),
];

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, run) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = fmt_secs(start.elapsed());
        match outcome {
            Ok(d) => println!("PASS criterion {id:>2} ({name}): {d} [{secs}]"),
            Err(d) => {
                println!("FAIL criterion {id:>2} ({name}): {d} [{secs}]");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
