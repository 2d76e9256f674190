use super::TrainError;
use crate::data::{NormRange, Normalizer, RawSeries};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Input width `N` and forecast horizon `H` of a sliding window (stride 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub input: usize,
    pub horizon: usize,
}

impl WindowSpec {
    pub fn new(input: usize, horizon: usize) -> Result<Self, TrainError> {
        if input == 0 || horizon == 0 {
            return Err(TrainError::InvalidConfig(format!(
                "window {input} and horizon {horizon} must be positive"
            )));
        }
        Ok(Self { input, horizon })
    }

    /// `len − N − H + 1`, or 0 when the series is too short.
    pub fn count(&self, len: usize) -> usize {
        (len + 1).saturating_sub(self.input + self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// Chronological split fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Splits {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Splits {
    /// 80% train, 20% test; the final checkpoint is kept.
    pub const HOLDOUT: Splits = Splits {
        train: 0.8,
        val: 0.0,
        test: 0.2,
    };
    /// 80/10/10; the best-validation checkpoint is kept.
    pub const TRAIN_VAL_TEST: Splits = Splits {
        train: 0.8,
        val: 0.1,
        test: 0.1,
    };

    pub fn validate(&self) -> Result<(), TrainError> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(TrainError::InvalidConfig(format!(
                "split fractions {parts:?} must be in [0, 1] and sum to 1"
            )));
        }
        if self.train == 0.0 || self.test == 0.0 {
            return Err(TrainError::InvalidConfig("train and test fractions must be positive".into()));
        }
        Ok(())
    }

    pub fn has_val(&self) -> bool {
        self.val > 0.0
    }

    /// First series index of the validation and test regions.
    pub fn boundaries(&self, len: usize) -> (usize, usize) {
        let b1 = (self.train * len as f64).round() as usize;
        let b2 = ((self.train + self.val) * len as f64).round() as usize;
        (b1.min(len), b2.min(len))
    }

    /// The split containing series index `i`.
    pub fn region(&self, len: usize, i: usize) -> Split {
        let (b1, b2) = self.boundaries(len);
        if i < b1 {
            Split::Train
        } else if i < b2 {
            Split::Val
        } else {
            Split::Test
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// Series index of the first input value.
    pub start: usize,
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// A normalized series cut into chronological window sets.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub spec: WindowSpec,
    pub splits: Splits,
    pub normalizer: Normalizer,
    /// The full normalized series.
    pub values: Vec<f64>,
    pub train: Vec<Window>,
    pub val: Vec<Window>,
    pub test: Vec<Window>,
}

impl Prepared {
    pub fn windows(&self, split: Split) -> &[Window] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Normalizes `series` with statistics of its training region and assigns
/// each window to the split holding its final target index.
pub fn prepare(
    series: &RawSeries,
    spec: WindowSpec,
    splits: Splits,
    range: NormRange,
) -> Result<Prepared, TrainError> {
    splits.validate()?;
    let len = series.len();
    let count = spec.count(len);
    if count == 0 {
        return Err(TrainError::TooShort {
            len,
            need: spec.input + spec.horizon,
        });
    }
    let (b1, _) = splits.boundaries(len);
    let normalizer = Normalizer::fit(&series.values()[..b1], range)?;
    prepare_with(series, spec, splits, normalizer)
}

/// As [`prepare`] with a given normalizer (e.g. one stored in a checkpoint).
pub fn prepare_with(
    series: &RawSeries,
    spec: WindowSpec,
    splits: Splits,
    normalizer: Normalizer,
) -> Result<Prepared, TrainError> {
    splits.validate()?;
    let len = series.len();
    let count = spec.count(len);
    if count == 0 {
        return Err(TrainError::TooShort {
            len,
            need: spec.input + spec.horizon,
        });
    }
    let values = normalizer.apply_all(series.values());
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for start in 0..count {
        let mid = start + spec.input;
        let end = mid + spec.horizon;
        let w = Window {
            start,
            input: values[start..mid].to_vec(),
            target: values[mid..end].to_vec(),
        };
        match splits.region(len, end - 1) {
            Split::Train => train.push(w),
            Split::Val => val.push(w),
            Split::Test => test.push(w),
        }
    }
    for (split, set) in [(Split::Train, &train), (Split::Test, &test)] {
        if set.is_empty() {
            return Err(TrainError::EmptySplit(split));
        }
    }
    if splits.has_val() && val.is_empty() {
        return Err(TrainError::EmptySplit(Split::Val));
    }
    Ok(Prepared {
        spec,
        splits,
        normalizer,
        values,
        train,
        val,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(len: usize) -> RawSeries {
        let t = (0..len).map(|i| i as f64).collect();
        let v = (0..len).map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.01).collect();
        RawSeries::new("ramp", t, v, serde_json::Value::Null).unwrap()
    }

    #[test]
    fn single_long_window() {
        let spec = WindowSpec::new(528, 132).unwrap();
        assert_eq!(spec.count(660), 1);
        assert_eq!(spec.count(659), 0);
        assert!(matches!(
            prepare(&ramp(600), spec, Splits::HOLDOUT, NormRange::Unit),
            Err(TrainError::TooShort { len: 600, need: 660 })
        ));
    }

    #[test]
    fn windows_respect_split_regions() {
        let s = ramp(300);
        let spec = WindowSpec::new(16, 3).unwrap();
        let p = prepare(&s, spec, Splits::TRAIN_VAL_TEST, NormRange::Unit).unwrap();
        let (b1, b2) = Splits::TRAIN_VAL_TEST.boundaries(300);
        assert_eq!((b1, b2), (240, 270));
        let last = |w: &Window| w.start + 16 + 3 - 1;
        assert!(p.train.iter().all(|w| last(w) < b1));
        assert!(p.val.iter().all(|w| (b1..b2).contains(&last(w))));
        assert!(p.test.iter().all(|w| last(w) >= b2));
        // chronological
        let starts: Vec<usize> = p.train.iter().chain(&p.val).chain(&p.test).map(|w| w.start).collect();
        assert!(starts.windows(2).all(|w| w[1] == w[0] + 1));
        // normalization fitted on the training region only
        let train_vals = &p.values[..b1];
        let lo = train_vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = train_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((lo - 0.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        assert_eq!(p.train[5].input[..], p.values[5..21]);
        assert_eq!(p.train[5].target[..], p.values[21..24]);
    }

    proptest! {
        #[test]
        fn count_matches_enumeration(len in 1usize..200, n in 1usize..40, h in 1usize..10) {
            let spec = WindowSpec::new(n, h).unwrap();
            let enumerated = (0..len).filter(|s| s + n + h <= len).count();
            prop_assert_eq!(spec.count(len), enumerated);
        }

        #[test]
        fn every_window_lands_in_one_split(len in 60usize..400, n in 1usize..20, h in 1usize..4) {
            let spec = WindowSpec::new(n, h).unwrap();
            if let Ok(p) = prepare(&ramp(len), spec, Splits::HOLDOUT, NormRange::Symmetric) {
                prop_assert_eq!(p.train.len() + p.val.len() + p.test.len(), spec.count(len));
            }
        }
    }
}
