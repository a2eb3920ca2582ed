//! Minimal deterministic SVG plots: MSE-vs-epoch line, predicted/actual
//! overlay, and the predicted-vs-actual scatter with its fitted line.
//! Hand-written SVG keeps the byte output reproducible (no timestamps, no
//! library version strings).

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evaluate::RegressionFit;
use crate::ingest::CountryCode;
use crate::mlp::TrainReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn around(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Frame {
        let mut f = Frame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for x in xs {
            f.x_min = f.x_min.min(x);
            f.x_max = f.x_max.max(x);
        }
        for y in ys {
            f.y_min = f.y_min.min(y);
            f.y_max = f.y_max.max(y);
        }
        if f.x_max == f.x_min {
            f.x_max += 1.0;
        }
        if f.y_max == f.y_min {
            f.y_max += 1.0;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{title}</text>\n",
        WIDTH / 2.0
    )
}

fn axes(frame: &Frame) -> String {
    format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{m}\" y=\"{bl}\" font-family=\"sans-serif\" font-size=\"11\">{x0:.4}</text>\n\
         <text x=\"{r}\" y=\"{bl}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{x1:.4}</text>\n\
         <text x=\"{ml}\" y=\"{b}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{y0:.4}</text>\n\
         <text x=\"{ml}\" y=\"{t}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{y1:.4}</text>\n",
        m = MARGIN,
        ml = MARGIN - 4.0,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        bl = HEIGHT - MARGIN + 16.0,
        r = WIDTH - MARGIN,
        x0 = frame.x_min,
        x1 = frame.x_max,
        y0 = frame.y_min,
        y1 = frame.y_max,
    )
}

fn polyline(frame: &Frame, points: &[(f64, f64)], color: &str) -> String {
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
        .collect();
    format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        coords.join(" ")
    )
}

fn scatter(frame: &Frame, points: &[(f64, f64)], color: &str) -> String {
    points
        .iter()
        .map(|(x, y)| {
            format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                frame.px(*x),
                frame.py(*y)
            )
        })
        .collect()
}

fn write_svg(path: &Path, body: String) -> Result<()> {
    std::fs::write(path, body + "</svg>\n").map_err(|e| Error::io(path, e))
}

/// Write `<country>_mse.svg`, `<country>_series.svg`, and
/// `<country>_fit.svg` into `dir`. Returns the three paths.
pub fn emit_plots(
    dir: &Path,
    country: CountryCode,
    report: &TrainReport,
    predictions: &[f64],
    actuals: &[f64],
    fit: &RegressionFit,
) -> Result<[PathBuf; 3]> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    // 1. training MSE per epoch
    let mse_points: Vec<(f64, f64)> = report
        .epoch_mse
        .iter()
        .enumerate()
        .map(|(i, &m)| (i as f64 + 1.0, m))
        .collect();
    let frame = Frame::around(
        mse_points.iter().map(|p| p.0),
        mse_points.iter().map(|p| p.1),
    );
    let mut body = svg_open(&format!("{country}: training MSE by epoch"));
    body += &axes(&frame);
    body += &polyline(&frame, &mse_points, "#1f77b4");
    let mse_path = dir.join(format!("{country}_mse.svg"));
    write_svg(&mse_path, body)?;

    // 2. predicted vs actual over time
    let idx = |v: &[f64]| -> Vec<(f64, f64)> {
        v.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect()
    };
    let frame = Frame::around(
        (0..actuals.len()).map(|i| i as f64),
        actuals.iter().chain(predictions.iter()).cloned(),
    );
    let mut body = svg_open(&format!("{country}: predicted vs actual"));
    body += &axes(&frame);
    body += &polyline(&frame, &idx(actuals), "#2ca02c");
    body += &polyline(&frame, &idx(predictions), "#d62728");
    let series_path = dir.join(format!("{country}_series.svg"));
    write_svg(&series_path, body)?;

    // 3. scatter with fitted regression line
    let points: Vec<(f64, f64)> = predictions
        .iter()
        .zip(actuals)
        .map(|(&p, &a)| (p, a))
        .collect();
    let frame = Frame::around(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let mut body = svg_open(&format!(
        "{country}: actual = {:.4} x predicted + {:.4} (r = {:.4})",
        fit.slope, fit.intercept, fit.r
    ));
    body += &axes(&frame);
    body += &scatter(&frame, &points, "#1f77b4");
    let line = [
        (frame.x_min, fit.slope * frame.x_min + fit.intercept),
        (frame.x_max, fit.slope * frame.x_max + fit.intercept),
    ];
    body += &polyline(&frame, &line, "#d62728");
    let fit_path = dir.join(format!("{country}_fit.svg"));
    write_svg(&fit_path, body)?;

    Ok([mse_path, series_path, fit_path])
}
