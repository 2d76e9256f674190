//! Benchmark series: deterministic generators, SILSO ingestion, CSV I/O and
//! train-split normalization.

mod generators;
mod lindblad;
mod silso;

pub use generators::{
    bessel_j, bessel_series, damped_shm, damped_shm_with, dqc, narma, narma_input, ShmParams,
    NARMA_INPUT,
};
pub use lindblad::{jaynes_cummings, jaynes_cummings_with, DensityMatrix, JcParams};
pub use silso::{load_silso, read_silso, write_silso, SilsoLoad};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: timestamps must be strictly increasing")]
    NonMonotone { line: usize },
    #[error("series is constant on the fitting range; cannot normalize")]
    ConstantSeries,
    #[error("density-matrix trace drifted by {drift:e} at step {step}")]
    TraceDrift { step: usize, drift: f64 },
    #[error("unknown dataset `{0}` (valid: shm, bessel, narma5, narma10, dqc, jc)")]
    UnknownDataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A named scalar series with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub name: String,
    t: Vec<f64>,
    v: Vec<f64>,
    /// Generator parameters or source description.
    pub meta: serde_json::Value,
}

impl RawSeries {
    pub fn new(
        name: impl Into<String>,
        t: Vec<f64>,
        v: Vec<f64>,
        meta: serde_json::Value,
    ) -> Result<Self, DataError> {
        if t.len() != v.len() {
            return Err(DataError::InvalidParameter(format!(
                "{} timestamps for {} values",
                t.len(),
                v.len()
            )));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(DataError::NonMonotone { line: i + 2 });
        }
        Ok(Self {
            name: name.into(),
            t,
            v,
            meta,
        })
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    /// Two-column CSV preceded by a `# meta:` JSON comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), DataError> {
        let mut meta = self.meta.clone();
        if let serde_json::Value::Object(map) = &mut meta {
            map.insert("name".into(), self.name.clone().into());
        }
        writeln!(out, "# meta: {}", serde_json::to_string(&meta)?)?;
        writeln!(out, "t,value")?;
        for (t, v) in self.t.iter().zip(&self.v) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, DataError> {
        let mut meta = serde_json::Value::Null;
        let (mut t, mut v) = (Vec::new(), Vec::new());
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = i + 1;
            if let Some(rest) = line.strip_prefix("# meta:") {
                meta = serde_json::from_str(rest.trim())?;
                continue;
            }
            if line.is_empty() || line.starts_with('#') || line.starts_with("t,") {
                continue;
            }
            let mut cols = line.split(',');
            let mut next = |what: &str| -> Result<f64, DataError> {
                cols.next()
                    .ok_or_else(|| DataError::Parse {
                        line: lineno,
                        msg: format!("missing {what}"),
                    })?
                    .trim()
                    .parse()
                    .map_err(|e| DataError::Parse {
                        line: lineno,
                        msg: format!("{what}: {e}"),
                    })
            };
            t.push(next("t")?);
            v.push(next("value")?);
        }
        let name = meta
            .get("name")
            .and_then(|n| n.as_str())
            .unwrap_or("series")
            .to_string();
        Self::new(name, t, v, meta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let file = std::fs::File::create(path)?;
        let mut out = std::io::BufWriter::new(file);
        self.write_csv(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// The built-in synthetic benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Shm,
    Bessel,
    Narma5,
    Narma10,
    Dqc,
    Jc,
}

impl Dataset {
    pub const ALL: [Dataset; 6] = [
        Dataset::Shm,
        Dataset::Bessel,
        Dataset::Narma5,
        Dataset::Narma10,
        Dataset::Dqc,
        Dataset::Jc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Shm => "shm",
            Dataset::Bessel => "bessel",
            Dataset::Narma5 => "narma5",
            Dataset::Narma10 => "narma10",
            Dataset::Dqc => "dqc",
            Dataset::Jc => "jc",
        }
    }

    /// Generates the series with default parameters.
    pub fn generate(self) -> Result<RawSeries, DataError> {
        match self {
            Dataset::Shm => damped_shm(1000, 20.0 / 999.0),
            Dataset::Bessel => bessel_series(1000, 30.0),
            Dataset::Narma5 => narma(5, 300),
            Dataset::Narma10 => narma(10, 300),
            Dataset::Dqc => dqc(1100, -2.0, 20.0),
            Dataset::Jc => jaynes_cummings(3000, 50.0),
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Dataset::ALL
            .into_iter()
            .find(|d| d.name() == lower)
            .ok_or_else(|| DataError::UnknownDataset(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormRange {
    /// `[−1, 1]`
    Symmetric,
    /// `[0, 1]`
    Unit,
}

impl NormRange {
    fn bounds(self) -> (f64, f64) {
        match self {
            NormRange::Symmetric => (-1.0, 1.0),
            NormRange::Unit => (0.0, 1.0),
        }
    }
}

/// Affine min-max map fitted on a reference slice (the training split).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: f64,
    pub max: f64,
    pub range: NormRange,
}

impl Normalizer {
    pub fn fit(values: &[f64], range: NormRange) -> Result<Self, DataError> {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > min) {
            return Err(DataError::ConstantSeries);
        }
        Ok(Self { min, max, range })
    }

    /// Multiplier from normalized units back to raw units.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.range.bounds();
        (self.max - self.min) / (hi - lo)
    }

    pub fn apply(&self, x: f64) -> f64 {
        let (lo, hi) = self.range.bounds();
        lo + (x - self.min) * (hi - lo) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        let (lo, hi) = self.range.bounds();
        self.min + (y - lo) * (self.max - self.min) / (hi - lo)
    }

    pub fn apply_all(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert_all(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.invert(y)).collect()
    }
}
