//! Recursive multi-step forecasting and the country x quarter forecast table.

use serde::{Deserialize, Serialize};

use crate::disaggregate::QuarterStamp;
use crate::error::{Error, Result};
use crate::ingest::CountryCode;
use crate::mlp::{predict, Network};
use crate::preprocess::{denormalize_one, NormParams};

/// Iterated one-step forecasting: each prediction is appended to the lag
/// window (normalized domain) to produce the next. Returns `horizon`
/// denormalized export levels.
pub fn recursive_forecast(
    net: &Network,
    last_window: &[f64],
    horizon: usize,
    params: NormParams,
) -> Result<Vec<f64>> {
    if last_window.len() != net.layer_sizes[0] {
        return Err(Error::InputSizeMismatch {
            expected: net.layer_sizes[0],
            got: last_window.len(),
        });
    }
    let mut window = last_window.to_vec();
    let mut out = Vec::with_capacity(horizon);
    for step in 1..=horizon {
        let pred = predict(net, &window)?;
        if !pred.is_finite() {
            return Err(Error::ForecastDiverged(step));
        }
        let level = denormalize_one(pred, params);
        if level <= 0.0 {
            return Err(Error::ForecastNonPositive(step));
        }
        out.push(level);
        window.rotate_left(1);
        *window.last_mut().unwrap() = pred;
    }
    Ok(out)
}

/// Forecast levels for a set of countries over a common horizon of
/// consecutive quarters starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTable {
    pub countries: Vec<CountryCode>,
    pub start: QuarterStamp,
    pub horizon: usize,
    /// values[country index][quarter index]
    pub values: Vec<Vec<f64>>,
}

impl ForecastTable {
    pub fn new(
        countries: Vec<CountryCode>,
        start: QuarterStamp,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let horizon = values.first().map(Vec::len).unwrap_or(0);
        if horizon == 0 || values.len() != countries.len() {
            return Err(Error::BadConfig(
                "forecast table needs one non-empty column per country".into(),
            ));
        }
        for (country, col) in countries.iter().zip(&values) {
            if col.len() != horizon {
                return Err(Error::BadConfig(format!(
                    "country {country}: expected {horizon} forecasts, got {}",
                    col.len()
                )));
            }
            if let Some(step) = col.iter().position(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::ForecastNonPositive(step + 1));
            }
        }
        Ok(ForecastTable {
            countries,
            start,
            horizon,
            values,
        })
    }
}

/// Emit the table as `year,quarter,<codes...>` CSV, one row per quarter in
/// ascending order, values in scientific notation. Byte-deterministic.
pub fn emit_forecast_csv(table: &ForecastTable) -> String {
    let mut out = String::from("year,quarter");
    for c in &table.countries {
        out.push(',');
        out.push_str(c.as_str());
    }
    out.push('\n');
    for q in 0..table.horizon {
        let stamp = table.start.advance(q);
        out.push_str(&format!("{},q{}", stamp.year, stamp.quarter));
        for col in &table.values {
            out.push_str(&format!(",{:.3e}", col[q]));
        }
        out.push('\n');
    }
    out
}
