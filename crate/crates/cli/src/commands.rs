use crate::config::{FileConfig, FlagOverrides, RunConfig, Task};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::{EvalArgs, ForecastArgs, GenArgs, ScanBenchArgs, SweepArgs, TrainArgs};
use gfwp_core::data::{self, load_silso, Dataset, RawSeries};
use gfwp_core::scan::{scan_bench as run_scan_bench, sequential_scaling, write_bench_csv};
use gfwp_core::train::{
    evaluate, predict_all, prepare, prepare_with, stage_sweep, train as run_train, write_loss_csv,
    write_sweep_csv, Checkpoint, CheckpointHeader, LossRecord, Split, SweepConfig, WindowSpec,
    CHECKPOINT_FORMAT,
};
use gfwp_core::{FastWeightModel, TrainConfig};
use serde::Serialize;
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Resolves a relative input path against `GFWP_DATA_DIR` when it does not
/// exist as given.
fn resolve_input(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os("GFWP_DATA_DIR") {
            return PathBuf::from(dir).join(path);
        }
    }
    path.to_path_buf()
}

struct Loaded {
    series: RawSeries,
    /// `(year, month)` per value for SILSO input.
    dates: Option<Vec<(i32, u32)>>,
}

fn load_series(path: &Path) -> Result<Loaded, CliError> {
    let path = resolve_input(path);
    if !path.exists() {
        return Err(CliError::Data(format!("data file {} not found", path.display())));
    }
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let wrap = |e: data::DataError| CliError::Data(format!("{}: {e}", path.display()));
    if is_csv {
        Ok(Loaded {
            series: RawSeries::load(&path).map_err(wrap)?,
            dates: None,
        })
    } else {
        let s = load_silso(&path).map_err(wrap)?;
        Ok(Loaded {
            series: s.series,
            dates: Some(s.dates),
        })
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn writer(path: &Path) -> Result<BufWriter<File>, CliError> {
    let f = File::create(path).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn sibling_dir(checkpoint: &Path, name: &str) -> PathBuf {
    checkpoint.parent().unwrap_or(Path::new(".")).join(name)
}

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    let dataset: Dataset = a.dataset.parse()?;
    let series = match (dataset, a.points, a.t_max) {
        (d, None, None) => d.generate()?,
        (Dataset::Shm, p, t) => {
            let p = p.unwrap_or(1000);
            data::damped_shm(p, t.unwrap_or(20.0) / (p.max(2) - 1) as f64)?
        }
        (Dataset::Bessel, p, t) => data::bessel_series(p.unwrap_or(1000), t.unwrap_or(30.0))?,
        (Dataset::Narma5, p, _) => data::narma(5, p.unwrap_or(300))?,
        (Dataset::Narma10, p, _) => data::narma(10, p.unwrap_or(300))?,
        (Dataset::Dqc, p, t) => data::dqc(p.unwrap_or(1100), -2.0, t.unwrap_or(20.0))?,
        (Dataset::Jc, p, t) => data::jaynes_cummings(p.unwrap_or(3000), t.unwrap_or(50.0))?,
    };
    let out = a.out.unwrap_or_else(|| {
        let dir = std::env::var_os("GFWP_DATA_DIR").map_or_else(|| PathBuf::from("."), PathBuf::from);
        dir.join(format!("{}.csv", dataset.name()))
    });
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    create_dir(dir)?;
    series.save(&out)?;
    let mut m = RunManifest::new(
        json!({"dataset": dataset, "points": series.len(), "meta": series.meta}),
        None,
        1,
    )?;
    m.outputs.push(out.clone());
    m.write(dir)?;
    println!("wrote {} ({} rows)", out.display(), series.len());
    Ok(())
}

pub fn train(a: TrainArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let flags = FlagOverrides {
        seed: a.seed,
        threads: Some(threads),
        window: a.window,
        horizon: a.horizon,
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        loss: a.loss,
        alpha: a.alpha,
    };
    let cfg = RunConfig::resolve(a.task, a.variant, file, &flags);
    cfg.train.validate()?;
    let loaded = load_series(&a.data)?;
    let data = prepare(
        &loaded.series,
        WindowSpec::new(cfg.window, cfg.horizon)?,
        cfg.train.splits,
        cfg.range,
    )?;
    let model = FastWeightModel::new(cfg.variant, cfg.dims);
    log::info!(
        "{} with {} parameters: {} train / {} val / {} test windows",
        cfg.variant,
        model.param_count(),
        data.train.len(),
        data.val.len(),
        data.test.len()
    );
    let run = run_train(&model, &data, &cfg.train)?;
    let metrics = evaluate(&model, &run.params, &data.test, &data.normalizer, None, cfg.train.seed, threads)?;

    create_dir(&a.out)?;
    let ckpt_path = a.out.join("checkpoint.json");
    let ckpt = Checkpoint {
        header: CheckpointHeader {
            format_version: CHECKPOINT_FORMAT,
            variant: cfg.variant,
            dims: cfg.dims,
            window: cfg.window,
            horizon: cfg.horizon,
            seed: cfg.train.seed,
            epoch: run.epoch,
            normalizer: data.normalizer,
            splits: cfg.train.splits,
            loss: cfg.train.loss,
            alpha: cfg.train.alpha,
            dataset: loaded.series.name.clone(),
        },
        params: run.params.clone(),
    };
    ckpt.save(&ckpt_path)?;

    let curve_path = a.out.join("loss_curve.csv");
    let mut w = writer(&curve_path)?;
    writeln!(w, "epoch,train_loss,val_loss")?;
    for e in &run.curve {
        let val = e.val_loss.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{}", e.epoch, e.train_loss, val)?;
    }
    w.flush()?;

    let record = |epoch, split: &str, loss| LossRecord {
        variant: cfg.variant,
        dataset: loaded.series.name.clone(),
        n: cfg.window,
        seed: cfg.train.seed,
        epoch,
        split: split.into(),
        loss,
    };
    let mut records = Vec::new();
    for e in &run.curve {
        records.push(record(e.epoch, "train", e.train_loss));
        if let Some(v) = e.val_loss {
            records.push(record(e.epoch, "val", v));
        }
    }
    records.push(record(run.epoch, "test", metrics.scaled_mse));
    let results_path = a.out.join("results.csv");
    let mut w = writer(&results_path)?;
    write_loss_csv(&records, &mut w)?;
    w.flush()?;

    let metrics_path = a.out.join("metrics.json");
    write_json(
        &metrics_path,
        &json!({
            "split": "test",
            "epoch": run.epoch,
            "params": model.param_count(),
            "val_loss": run.best_val_loss(),
            "metrics": metrics,
        }),
    )?;
    let mut m = RunManifest::new(&cfg, Some(cfg.train.seed), threads)?;
    m.outputs = vec![ckpt_path.clone(), curve_path, results_path, metrics_path];
    m.write(&a.out)?;
    println!(
        "{} epoch {}: test mse {:.6e}, pae {:.4}, pte {:.4} -> {}",
        cfg.variant,
        run.epoch,
        metrics.scaled_mse,
        metrics.pae,
        metrics.pte,
        ckpt_path.display()
    );
    Ok(())
}

pub fn eval(a: EvalArgs, threads: usize) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(resolve_input(&a.checkpoint))?;
    let h = &ckpt.header;
    let model = ckpt.model();
    let loaded = load_series(&a.data)?;
    let data = prepare_with(&loaded.series, WindowSpec::new(h.window, h.horizon)?, h.splits, h.normalizer)?;
    let seed = a.seed.unwrap_or(h.seed);
    let metrics = evaluate(&model, &ckpt.params, &data.test, &data.normalizer, a.shots, seed, threads)?;
    let loss_on = |split: Split| -> Result<Option<f64>, CliError> {
        let ws = data.windows(split);
        if ws.is_empty() {
            return Ok(None);
        }
        let preds = predict_all(&model, &ckpt.params, ws, threads)?;
        let mut total = 0.0;
        for (w, p) in ws.iter().zip(&preds) {
            total += h.loss.value(&w.target, p, h.alpha)?;
        }
        Ok(Some(total / ws.len() as f64))
    };
    let out = a.out.unwrap_or_else(|| sibling_dir(&a.checkpoint, "eval"));
    create_dir(&out)?;
    let metrics_path = out.join("metrics.json");
    write_json(
        &metrics_path,
        &json!({
            "checkpoint": a.checkpoint,
            "split": "test",
            "windows": data.test.len(),
            "val_loss": loss_on(Split::Val)?,
            "test_loss": loss_on(Split::Test)?,
            "metrics": metrics,
        }),
    )?;
    let mut outputs = vec![metrics_path];
    if a.export_trajectory {
        let last = data.test.last().ok_or(CliError::Data("empty test split".into()))?;
        let report = model.trajectory(&ckpt.params, &last.input)?;
        let traj_path = out.join("trajectory.csv");
        let mut w = writer(&traj_path)?;
        report.write_csv(&mut w)?;
        w.flush()?;
        let beta_path = out.join("beta.json");
        write_json(&beta_path, &report.beta_json())?;
        outputs.extend([traj_path, beta_path]);
    }
    let mut m = RunManifest::new(
        json!({"checkpoint": a.checkpoint, "data": a.data, "shots": a.shots, "header": h}),
        Some(seed),
        threads,
    )?;
    m.outputs = outputs;
    m.write(&out)?;
    print!("test mse {:.6e}, pae {:.4}, pte {:.4}", metrics.scaled_mse, metrics.pae, metrics.pte);
    if let Some(r) = metrics.relative_mse {
        print!(", relative mse {r:.6e} at {} shots", a.shots.unwrap_or_default());
    }
    println!();
    Ok(())
}

fn next_month((y, m): (i32, u32), k: usize) -> (i32, u32) {
    let idx = y as i64 * 12 + (m as i64 - 1) + k as i64;
    (idx.div_euclid(12) as i32, idx.rem_euclid(12) as u32 + 1)
}

pub fn forecast(a: ForecastArgs) -> Result<(), CliError> {
    let ckpt = Checkpoint::load(resolve_input(&a.checkpoint))?;
    let h = &ckpt.header;
    let model = ckpt.model();
    let loaded = load_series(&a.silso)?;
    let values = loaded.series.values();
    if values.len() < h.window {
        return Err(CliError::Data(format!(
            "{} values available, window needs {}",
            values.len(),
            h.window
        )));
    }
    let input = h.normalizer.apply_all(&values[values.len() - h.window..]);
    let pred = model.predict(&ckpt.params, &input)?;
    let out = a.out.unwrap_or_else(|| sibling_dir(&a.checkpoint, "forecast"));
    create_dir(&out)?;
    let path = out.join("forecast.csv");
    let mut w = writer(&path)?;
    let t = loaded.series.t();
    let step = if t.len() > 1 { t[t.len() - 1] - t[t.len() - 2] } else { 1.0 };
    match &loaded.dates {
        Some(dates) => {
            writeln!(w, "step,year,month,decimal_year,value")?;
            let last = *dates.last().ok_or(CliError::Data("empty series".into()))?;
            for (k, p) in pred.iter().enumerate() {
                let (y, m) = next_month(last, k + 1);
                let dec = f64::from(y) + (f64::from(m) - 0.5) / 12.0;
                writeln!(w, "{},{y},{m},{dec:.3},{}", k + 1, h.normalizer.invert(*p).max(0.0))?;
            }
        }
        None => {
            writeln!(w, "step,t,value")?;
            let t_last = t[t.len() - 1];
            for (k, p) in pred.iter().enumerate() {
                let tk = t_last + step * (k + 1) as f64;
                writeln!(w, "{},{tk},{}", k + 1, h.normalizer.invert(*p).max(0.0))?;
            }
        }
    }
    w.flush()?;
    let mut m = RunManifest::new(json!({"checkpoint": a.checkpoint, "silso": a.silso, "header": h}), Some(h.seed), 1)?;
    m.outputs.push(path.clone());
    m.write(&out)?;
    println!("wrote {} ({} rows)", path.display(), pred.len());
    Ok(())
}

pub fn scan_bench(a: ScanBenchArgs) -> Result<(), CliError> {
    if a.ts.is_empty() || a.ps.is_empty() || a.dim == 0 || a.reps == 0 || a.ps.contains(&0) {
        return Err(CliError::Usage("T, p, dim and reps must be nonempty and positive".into()));
    }
    let rows = run_scan_bench(&a.ts, &a.ps, a.dim, a.reps);
    create_dir(&a.out)?;
    let path = a.out.join("scan_bench.csv");
    let mut w = writer(&path)?;
    write_bench_csv(&rows, &mut w)?;
    w.flush()?;
    let (slope, r2) = sequential_scaling(&rows);
    let mut m = RunManifest::new(
        json!({"T": a.ts, "p": a.ps, "dim": a.dim, "reps": a.reps}),
        None,
        a.ps.iter().copied().max().unwrap_or(1),
    )?;
    m.outputs.push(path.clone());
    m.write(&a.out)?;
    println!("sequential log-log slope {slope:.3} (r² {r2:.4}); wrote {}", path.display());
    Ok(())
}

pub fn sweep(a: SweepArgs, file: &FileConfig, threads: usize) -> Result<(), CliError> {
    let base = RunConfig::resolve(
        Task::Series,
        a.variants.first().copied().unwrap_or(gfwp_core::Variant::Fwp),
        file,
        &FlagOverrides {
            threads: Some(threads),
            epochs: a.epochs,
            batch_size: a.batch,
            learning_rate: a.lr,
            ..FlagOverrides::default()
        },
    );
    let datasets = a
        .datasets
        .iter()
        .map(|d| Ok(d.parse::<Dataset>()?.generate()?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let cfg = SweepConfig {
        variants: a.variants,
        windows: a.windows,
        seeds: (0..a.seeds).collect(),
        dims: base.dims,
        train: TrainConfig { ..base.train },
        range: base.range,
    };
    cfg.train.validate()?;
    let (rows, records) = stage_sweep(&cfg, &datasets)?;
    create_dir(&a.out)?;
    let sweep_path = a.out.join("sweep.csv");
    let mut w = writer(&sweep_path)?;
    write_sweep_csv(&rows, &mut w)?;
    w.flush()?;
    let results_path = a.out.join("results.csv");
    let mut w = writer(&results_path)?;
    write_loss_csv(&records, &mut w)?;
    w.flush()?;
    let mut m = RunManifest::new(&cfg, None, threads)?;
    m.outputs = vec![sweep_path.clone(), results_path];
    m.write(&a.out)?;
    for r in &rows {
        println!("{:<14} {:<8} N={:<3} mse {:.3e} ± {:.3e}", r.variant, r.dataset, r.n, r.mse.mean, r.mse.std);
    }
    println!("wrote {}", sweep_path.display());
    Ok(())
}
