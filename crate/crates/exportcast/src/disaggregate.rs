//! Annual-to-quarterly disaggregation.
//!
//! Quarterly points are interpolated annual *levels*, not flows that sum to
//! the annual total: the forecast tables this pipeline targets carry
//! quarterly values at annual magnitude. Three interpolation methods are
//! provided; `linear` is the default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AnnualSeries, CountryCode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Flat,
    Linear,
    Cubic,
}

impl Default for Method {
    fn default() -> Self {
        Method::Linear
    }
}

/// A calendar quarter, `quarter` in 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuarterStamp {
    pub year: i32,
    pub quarter: u8,
}

impl QuarterStamp {
    pub fn new(year: i32, quarter: u8) -> Self {
        assert!((1..=4).contains(&quarter), "quarter must be 1..=4");
        QuarterStamp { year, quarter }
    }

    /// The stamp `n` quarters after this one.
    pub fn advance(self, n: usize) -> Self {
        let idx = self.year as i64 * 4 + (self.quarter as i64 - 1) + n as i64;
        QuarterStamp {
            year: (idx.div_euclid(4)) as i32,
            quarter: (idx.rem_euclid(4) + 1) as u8,
        }
    }
}

impl std::fmt::Display for QuarterStamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} q{}", self.year, self.quarter)
    }
}

/// A country's quarterly export levels, 4 points per source year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlySeries {
    pub country: CountryCode,
    pub start: QuarterStamp,
    pub values: Vec<f64>,
}

impl QuarterlySeries {
    /// Stamp of the last observation.
    pub fn last_stamp(&self) -> QuarterStamp {
        self.start.advance(self.values.len() - 1)
    }
}

/// Expand an annual series to 4 points per year using the given method.
///
/// Quarter offsets within a year are 0, 1/4, 1/2, 3/4 of the way to the next
/// annual value. The last year is held flat under `linear`; `cubic`
/// extrapolates its final spline segment.
pub fn to_quarterly(s: &AnnualSeries, method: Method) -> Result<QuarterlySeries> {
    if s.values.is_empty() {
        return Err(Error::EmptySeries);
    }
    let a = &s.values;
    let n = a.len();
    let mut values = Vec::with_capacity(4 * n);

    match method {
        Method::Flat => {
            for &v in a {
                values.extend_from_slice(&[v, v, v, v]);
            }
        }
        Method::Linear => {
            for i in 0..n {
                let next = if i + 1 < n { a[i + 1] } else { a[i] };
                for k in 0..4 {
                    let t = k as f64 / 4.0;
                    values.push(a[i] + t * (next - a[i]));
                }
            }
        }
        Method::Cubic => {
            let spline = NaturalCubic::fit(a);
            for i in 0..n {
                for k in 0..4 {
                    let x = i as f64 + k as f64 / 4.0;
                    values.push(spline.eval(x));
                }
            }
            for (i, &v) in values.iter().enumerate() {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::CubicNonPositive(i));
                }
            }
        }
    }

    Ok(QuarterlySeries {
        country: s.country,
        start: QuarterStamp::new(s.start_year, 1),
        values,
    })
}

/// Natural cubic spline through knots (0, y0), (1, y1), ... (n-1, y_{n-1}).
struct NaturalCubic {
    y: Vec<f64>,
    /// second derivatives at the knots
    m: Vec<f64>,
}

impl NaturalCubic {
    fn fit(y: &[f64]) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for interior second derivatives, unit knot
            // spacing: m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1])
            let dim = n - 2;
            let mut diag = vec![4.0; dim];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]))
                .collect();
            for i in 1..dim {
                let factor = 1.0 / diag[i - 1];
                diag[i] -= factor;
                rhs[i] -= factor * rhs[i - 1];
            }
            m[dim] = rhs[dim - 1] / diag[dim - 1];
            for i in (0..dim - 1).rev() {
                m[i + 1] = (rhs[i] - m[i + 2]) / diag[i];
            }
        }
        NaturalCubic { y: y.to_vec(), m }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        if n == 1 {
            return self.y[0];
        }
        // clamp to the last segment; x past n-1 extrapolates that segment
        let i = (x.floor() as usize).min(n - 2);
        let t = x - i as f64;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let a = y1 - y0 - (2.0 * m0 + m1) / 6.0;
        y0 + a * t + m0 / 2.0 * t * t + (m1 - m0) / 6.0 * t * t * t
    }
}
