//! The four pipeline commands behind the CLI: ingest, train, evaluate,
//! forecast. Each works purely through files under the configured output
//! directory so runs are resumable and byte-reproducible.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{NormFit, RunConfig};
use crate::disaggregate::{to_quarterly, QuarterStamp, QuarterlySeries};
use crate::error::{Error, Result};
use crate::evaluate::{fit_regression, kfold_evaluate, mae, mape, mse, rmse, RegressionFit};
use crate::forecast::{emit_forecast_csv, recursive_forecast, ForecastTable};
use crate::ingest::{parse_worldbank_csv, validate_series, CountryCode};
use crate::mlp::{init_network, load_model, predict, save_model, train, Network, TrainReport};
use crate::plot::emit_plots;
use crate::preprocess::{
    chrono_split, denormalize, fit_norm, make_windows, normalize, Dataset, NormParams,
};

/// Per-country training artifact stored next to the model binary: the
/// normalization constants and last lag window the forecast step needs,
/// plus the full training report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryArtifacts {
    pub country: CountryCode,
    pub norm: NormParams,
    /// last `window` normalized observations, oldest first
    pub last_window: Vec<f64>,
    pub report: TrainReport,
}

pub struct IngestSummary {
    pub quarterly_path: PathBuf,
    pub counts: Vec<(CountryCode, usize)>,
}

pub struct TrainSummary {
    /// (country, model path, report path)
    pub trained: Vec<(CountryCode, PathBuf, PathBuf)>,
}

pub struct EvaluateSummary {
    pub metrics_path: PathBuf,
    pub regression_path: PathBuf,
}

pub struct ForecastSummary {
    pub forecast_path: PathBuf,
    pub plots_dir: PathBuf,
    pub table: ForecastTable,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn quarterly_path(out_dir: &Path) -> PathBuf {
    out_dir.join("quarterly.csv")
}

fn model_path(out_dir: &Path, country: CountryCode) -> PathBuf {
    out_dir.join("models").join(format!("{country}.mlp"))
}

fn report_path(out_dir: &Path, country: CountryCode) -> PathBuf {
    out_dir.join("reports").join(format!("{country}.json"))
}

/// Shortest decimal string that parses back to the same f64.
fn f64_exact(v: f64) -> String {
    let s = format!("{v}");
    if s.parse::<f64>() == Ok(v) {
        s
    } else {
        format!("{v:e}")
    }
}

fn run_per_country<T, F>(countries: &[CountryCode], jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(CountryCode) -> Result<T> + Sync,
{
    let work = || countries.par_iter().map(|&c| f(c)).collect::<Result<Vec<T>>>();
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("rayon pool")
            .install(work),
        None => work(),
    }
}

/// Parse the raw annual file, validate, disaggregate to quarterly, and write
/// the intermediate `country,year,quarter,value` CSV.
pub fn cmd_ingest(config: &RunConfig) -> Result<IngestSummary> {
    let content = std::fs::read_to_string(&config.data_path)
        .map_err(|e| Error::io(&config.data_path, e))?;
    let annual = parse_worldbank_csv(
        &content,
        &config.indicator,
        &config.countries,
        config.year_span(),
    )?;
    let quarterly: Vec<QuarterlySeries> = annual
        .into_iter()
        .map(|s| {
            let s = validate_series(s, config.year_span())?;
            to_quarterly(&s, config.disaggregation)
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("country,year,quarter,value\n");
    for q in &quarterly {
        for (i, &v) in q.values.iter().enumerate() {
            let stamp = q.start.advance(i);
            csv.push_str(&format!(
                "{},{},{},{}\n",
                q.country,
                stamp.year,
                stamp.quarter,
                f64_exact(v)
            ));
        }
    }

    let out_dir = config.effective_output_dir();
    let path = quarterly_path(&out_dir);
    write_atomic(&path, csv.as_bytes())?;
    Ok(IngestSummary {
        quarterly_path: path,
        counts: quarterly.iter().map(|q| (q.country, q.values.len())).collect(),
    })
}

/// Read the intermediate quarterly CSV back, restricted to `countries` in
/// their given order.
pub fn read_quarterly(path: &Path, countries: &[CountryCode]) -> Result<Vec<QuarterlySeries>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());

    struct Partial {
        start: QuarterStamp,
        values: Vec<f64>,
    }
    let mut data: std::collections::HashMap<CountryCode, Partial> = Default::default();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let country = CountryCode::new(record.get(0).unwrap_or("").trim())?;
        let bad_cell = |col: usize| Error::BadNumericCell {
            row: row_idx + 2,
            col: col + 1,
            value: record.get(col).unwrap_or("").to_string(),
        };
        let year: i32 = record.get(1).unwrap_or("").parse().map_err(|_| bad_cell(1))?;
        let quarter: u8 = record.get(2).unwrap_or("").parse().map_err(|_| bad_cell(2))?;
        let value: f64 = record.get(3).unwrap_or("").parse().map_err(|_| bad_cell(3))?;
        let entry = data.entry(country).or_insert_with(|| Partial {
            start: QuarterStamp::new(year, quarter),
            values: Vec::new(),
        });
        entry.values.push(value);
    }

    countries
        .iter()
        .map(|&country| {
            let p = data
                .remove(&country)
                .ok_or_else(|| Error::CountryNotFound(country.to_string()))?;
            Ok(QuarterlySeries {
                country,
                start: p.start,
                values: p.values,
            })
        })
        .collect()
}

/// Fit normalization, window, and split one quarterly series per config.
pub fn prepare(series: &QuarterlySeries, config: &RunConfig) -> Result<(NormParams, Vec<f64>, Dataset)> {
    let values = &series.values;
    let norm = match config.norm_fit {
        NormFit::Full => fit_norm(values)?,
        NormFit::TrainOnly => {
            // the training samples only ever see values up to split + window
            let sample_count = values.len().saturating_sub(config.window);
            let split = (config.train_frac * sample_count as f64).floor() as usize;
            let train_end = (split + config.window).min(values.len());
            fit_norm(&values[..train_end])?
        }
    };
    let normalized = normalize(values, norm);
    let dataset = chrono_split(make_windows(&normalized, config.window)?, config.train_frac)?;
    Ok((norm, normalized, dataset))
}

/// Train one model per country and persist model + artifact files.
pub fn cmd_train(config: &RunConfig, jobs: Option<usize>) -> Result<TrainSummary> {
    let out_dir = config.effective_output_dir();
    let quarterly = read_quarterly(&quarterly_path(&out_dir), &config.countries)?;
    let net_cfg = config.network_config();

    let trained = run_per_country(&config.countries, jobs, |country| {
        let series = quarterly.iter().find(|q| q.country == country).unwrap();
        let (norm, normalized, dataset) = prepare(series, config)?;
        let (mut net, mut state) = init_network(&net_cfg)?;
        let report = train(&mut net, &mut state, &dataset, &net_cfg)?;

        let m_path = model_path(&out_dir, country);
        if let Some(parent) = m_path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let tmp = m_path.with_extension("tmp");
        save_model(&net, &tmp)?;
        std::fs::rename(&tmp, &m_path).map_err(|e| Error::io(&m_path, e))?;

        let artifacts = CountryArtifacts {
            country,
            norm,
            last_window: normalized[normalized.len() - config.window..].to_vec(),
            report,
        };
        let r_path = report_path(&out_dir, country);
        let json = serde_json::to_string_pretty(&artifacts).expect("serializable artifacts");
        write_atomic(&r_path, json.as_bytes())?;
        Ok((country, m_path, r_path))
    })?;

    Ok(TrainSummary { trained })
}

fn load_artifacts(out_dir: &Path, country: CountryCode) -> Result<(Network, CountryArtifacts)> {
    let m_path = model_path(out_dir, country);
    let r_path = report_path(out_dir, country);
    if !m_path.exists() || !r_path.exists() {
        return Err(Error::MissingModel(country.to_string()));
    }
    let net = load_model(&m_path)?;
    let text = std::fs::read_to_string(&r_path).map_err(|e| Error::io(&r_path, e))?;
    let artifacts: CountryArtifacts = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: r_path.clone(),
        source: e,
    })?;
    Ok((net, artifacts))
}

fn split_predictions(
    net: &Network,
    dataset: &Dataset,
    train_split: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let samples = if train_split { dataset.train() } else { dataset.test() };
    let mut predictions = Vec::with_capacity(samples.len());
    let mut actuals = Vec::with_capacity(samples.len());
    for s in samples {
        predictions.push(predict(net, &s.lags)?);
        actuals.push(s.target);
    }
    Ok((predictions, actuals))
}

/// Metric row: MSE/RMSE/MAE on normalized values (the table-shaped numbers),
/// MAPE on denormalized levels (the normalized series touches 0).
fn metric_row(
    country: CountryCode,
    split: &str,
    predictions: &[f64],
    actuals: &[f64],
    norm: NormParams,
) -> Result<String> {
    let p_denorm = denormalize(predictions, norm);
    let a_denorm = denormalize(actuals, norm);
    Ok(format!(
        "{},{},{},{},{},{}\n",
        country,
        split,
        f64_exact(mse(predictions, actuals)?),
        f64_exact(rmse(predictions, actuals)?),
        f64_exact(mape(&p_denorm, &a_denorm)?),
        f64_exact(mae(predictions, actuals)?),
    ))
}

fn regression_row(country: CountryCode, split: &str, fit: &RegressionFit) -> String {
    format!(
        "{},{},{},{},{}\n",
        country,
        split,
        f64_exact(fit.slope),
        f64_exact(fit.intercept),
        f64_exact(fit.r)
    )
}

/// Compute the Tables 1-2-shaped metrics CSV plus per-country regression
/// fits; with `kfold`, append per-fold rows.
pub fn cmd_evaluate(config: &RunConfig, jobs: Option<usize>, kfold: bool) -> Result<EvaluateSummary> {
    let out_dir = config.effective_output_dir();
    let quarterly = read_quarterly(&quarterly_path(&out_dir), &config.countries)?;

    let per_country = run_per_country(&config.countries, jobs, |country| {
        let series = quarterly.iter().find(|q| q.country == country).unwrap();
        let (norm, _, dataset) = prepare(series, config)?;
        let (net, _) = load_artifacts(&out_dir, country)?;

        let (train_p, train_a) = split_predictions(&net, &dataset, true)?;
        let (test_p, test_a) = split_predictions(&net, &dataset, false)?;

        let mut metrics = String::new();
        metrics += &metric_row(country, "train", &train_p, &train_a, norm)?;
        metrics += &metric_row(country, "test", &test_p, &test_a, norm)?;

        let mut regression = String::new();
        regression += &regression_row(country, "train", &fit_regression(&train_p, &train_a)?);
        regression += &regression_row(country, "test", &fit_regression(&test_p, &test_a)?);

        if kfold {
            let report = kfold_evaluate(
                &dataset.samples,
                config.k,
                &config.network_config(),
                Some(norm),
            )?;
            for fold in &report.folds {
                metrics += &format!(
                    "{},fold{},{},{},{},{}\n",
                    country,
                    fold.fold,
                    f64_exact(fold.metrics.mse),
                    f64_exact(fold.metrics.rmse),
                    f64_exact(fold.metrics.mape),
                    f64_exact(fold.metrics.mae),
                );
                regression += &regression_row(country, &format!("fold{}", fold.fold), &fold.fit);
            }
        }
        Ok((metrics, regression))
    })?;

    let mut metrics_csv = String::from("country,split,mse,rmse,mape,mae\n");
    let mut regression_csv = String::from("country,split,slope,intercept,r\n");
    for (m, r) in per_country {
        metrics_csv += &m;
        regression_csv += &r;
    }

    let metrics_path = out_dir.join("metrics.csv");
    let regression_path = out_dir.join("regression.csv");
    write_atomic(&metrics_path, metrics_csv.as_bytes())?;
    write_atomic(&regression_path, regression_csv.as_bytes())?;
    Ok(EvaluateSummary {
        metrics_path,
        regression_path,
    })
}

/// Emit the published forecast table and the per-country plot set.
///
/// The recursion runs `discard_quarters + horizon` steps; the leading
/// `discard_quarters` bridge the gap between the last observation and the
/// published window and are dropped.
pub fn cmd_forecast(config: &RunConfig, jobs: Option<usize>) -> Result<ForecastSummary> {
    let out_dir = config.effective_output_dir();
    let quarterly = read_quarterly(&quarterly_path(&out_dir), &config.countries)?;
    let plots_dir = out_dir.join("plots");

    let columns = run_per_country(&config.countries, jobs, |country| {
        let series = quarterly.iter().find(|q| q.country == country).unwrap();
        let (norm, _, dataset) = prepare(series, config)?;
        let (net, artifacts) = load_artifacts(&out_dir, country)?;

        let total = config.discard_quarters + config.horizon;
        let mut levels = recursive_forecast(&net, &artifacts.last_window, total, norm)?;
        let published: Vec<f64> = levels.split_off(config.discard_quarters);

        let (test_p, test_a) = split_predictions(&net, &dataset, false)?;
        let fit = fit_regression(&test_p, &test_a)?;
        emit_plots(&plots_dir, country, &artifacts.report, &test_p, &test_a, &fit)?;
        Ok(published)
    })?;

    let start = quarterly[0]
        .last_stamp()
        .advance(1 + config.discard_quarters);
    let table = ForecastTable::new(config.countries.clone(), start, columns)?;
    let forecast_path = out_dir.join("forecast.csv");
    write_atomic(&forecast_path, emit_forecast_csv(&table).as_bytes())?;
    Ok(ForecastSummary {
        forecast_path,
        plots_dir,
        table,
    })
}
