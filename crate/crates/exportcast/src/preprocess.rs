//! Min-max normalization, sliding-window sample construction, and the
//! chronological train/test split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Min and max of a series, the parameters of the affine [0,1] rescaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub x_min: f64,
    pub x_max: f64,
}

/// One supervised sample: `w` consecutive normalized values (oldest first)
/// and the value that follows them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub lags: Vec<f64>,
    pub target: f64,
}

/// Time-ordered samples with a chronological split point: samples before
/// `split_index` are training, the rest are test.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub split_index: usize,
}

impl Dataset {
    pub fn train(&self) -> &[Sample] {
        &self.samples[..self.split_index]
    }

    pub fn test(&self) -> &[Sample] {
        &self.samples[self.split_index..]
    }
}

/// Fit normalization parameters: the exact min and max of the input.
pub fn fit_norm(values: &[f64]) -> Result<NormParams> {
    if values.len() < 2 {
        return Err(Error::TooFewValues(values.len()));
    }
    let x_min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
        return Err(Error::DegenerateRange);
    }
    Ok(NormParams { x_min, x_max })
}

/// Map values through (x - x_min) / (x_max - x_min). Values outside
/// [x_min, x_max] land outside [0, 1]; no clamping.
pub fn normalize(values: &[f64], p: NormParams) -> Vec<f64> {
    let range = p.x_max - p.x_min;
    values.iter().map(|&x| (x - p.x_min) / range).collect()
}

/// Inverse of [`normalize`]: x_min + v * (x_max - x_min).
pub fn denormalize(values: &[f64], p: NormParams) -> Vec<f64> {
    let range = p.x_max - p.x_min;
    values.iter().map(|&v| p.x_min + v * range).collect()
}

pub fn normalize_one(x: f64, p: NormParams) -> f64 {
    (x - p.x_min) / (p.x_max - p.x_min)
}

pub fn denormalize_one(v: f64, p: NormParams) -> f64 {
    p.x_min + v * (p.x_max - p.x_min)
}

/// Build sliding-window samples: sample `i` takes values `[i, i+w)` as lags
/// and value `i+w` as target, giving `len - w` samples.
pub fn make_windows(values: &[f64], window: usize) -> Result<Vec<Sample>> {
    if window == 0 {
        return Err(Error::ZeroWindow);
    }
    if values.len() <= window {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            window,
        });
    }
    Ok((0..values.len() - window)
        .map(|i| Sample {
            lags: values[i..i + window].to_vec(),
            target: values[i + window],
        })
        .collect())
}

/// Split samples chronologically: the earliest `floor(frac * count)` are
/// training, the rest test. No shuffling.
pub fn chrono_split(samples: Vec<Sample>, train_frac: f64) -> Result<Dataset> {
    let count = samples.len();
    let split_index = (train_frac * count as f64).floor() as usize;
    if !(0.0..1.0).contains(&train_frac) || split_index == 0 || split_index >= count {
        return Err(Error::BadSplit {
            frac: train_frac,
            count,
        });
    }
    Ok(Dataset {
        samples,
        split_index,
    })
}
