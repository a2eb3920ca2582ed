//! Run configuration: a single JSON document covering the whole pipeline.
//! Unknown keys are rejected so a typo in a hyperparameter name fails loudly
//! instead of silently falling back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::disaggregate::Method;
use crate::error::{Error, Result};
use crate::ingest::CountryCode;
use crate::mlp::{Activation, NetworkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormFit {
    /// Fit min/max on the full series, matching a pipeline that normalizes
    /// before splitting. Known train/test leakage, kept as the default to
    /// mirror the reproduced setup.
    Full,
    TrainOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub countries: Vec<CountryCode>,
    pub data_path: PathBuf,
    pub indicator: String,
    pub start_year: i32,
    pub end_year: i32,
    pub disaggregation: Method,
    pub window: usize,
    pub train_frac: f64,
    pub norm_fit: NormFit,
    /// Full layer widths including input and output. When absent, defaults
    /// to [window, 16, 1].
    pub layer_sizes: Option<Vec<usize>>,
    pub activation: Activation,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Cross-validation fold count.
    pub k: usize,
    /// Published forecast horizon in quarters.
    pub horizon: usize,
    /// Quarters forecast and discarded between the last observation and the
    /// published window (the data end in 2019, the table starts 2021).
    pub discard_quarters: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let countries = ["USA", "CAN", "DEU", "FRA", "JPN", "TUR", "KOR", "PRT", "GRC", "IRN"]
            .iter()
            .map(|c| CountryCode::new(c).unwrap())
            .collect();
        RunConfig {
            countries,
            data_path: PathBuf::from("data/worldbank_exports.csv"),
            indicator: crate::ingest::DEFAULT_INDICATOR.to_string(),
            start_year: 1970,
            end_year: 2019,
            disaggregation: Method::Linear,
            window: 4,
            train_frac: 0.75,
            norm_fit: NormFit::Full,
            layer_sizes: None,
            activation: Activation::Relu,
            epochs: 200,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            k: 5,
            horizon: 20,
            discard_quarters: 4,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::BadConfig(msg));
        if self.countries.is_empty() {
            return err("countries must be non-empty".into());
        }
        if self.end_year < self.start_year {
            return err(format!(
                "end_year {} precedes start_year {}",
                self.end_year, self.start_year
            ));
        }
        if self.window == 0 {
            return err("window must be >= 1".into());
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return err(format!("train_frac {} must lie in (0, 1)", self.train_frac));
        }
        if let Some(sizes) = &self.layer_sizes {
            if sizes.first() != Some(&self.window) {
                return err(format!(
                    "layer_sizes must start with the window size {}",
                    self.window
                ));
            }
        }
        if self.horizon == 0 {
            return err("horizon must be >= 1".into());
        }
        if self.k < 2 {
            return err("k must be >= 2".into());
        }
        self.network_config().validate()?;
        Ok(())
    }

    pub fn network_config(&self) -> NetworkConfig {
        NetworkConfig {
            layer_sizes: self
                .layer_sizes
                .clone()
                .unwrap_or_else(|| vec![self.window, 16, 1]),
            hidden_activation: self.activation,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            seed: self.seed,
        }
    }

    pub fn year_span(&self) -> std::ops::RangeInclusive<i32> {
        self.start_year..=self.end_year
    }

    /// Output directory, honoring the EXPORTCAST_OUT override.
    pub fn effective_output_dir(&self) -> PathBuf {
        match std::env::var_os("EXPORTCAST_OUT") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}
