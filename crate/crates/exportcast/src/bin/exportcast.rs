use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use exportcast::commands;
use exportcast::ingest::CountryCode;
use exportcast::RunConfig;

#[derive(Parser)]
#[command(name = "exportcast", about = "Export-forecasting pipeline: ingest, train, evaluate, forecast")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Max countries processed concurrently
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Restrict to these countries (repeatable); defaults to the configured list
    #[arg(long = "country", global = true)]
    countries: Vec<CountryCode>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the annual export file and write the quarterly intermediate CSV
    Ingest,
    /// Train one model per country
    Train,
    /// Write the metrics and regression CSVs
    Evaluate {
        /// Also run k-fold cross-validation per country
        #[arg(long)]
        kfold: bool,
    },
    /// Emit the forecast table and plot set
    Forecast,
}

fn load_config(cli: &Cli) -> exportcast::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if !cli.countries.is_empty() {
        config.countries = cli.countries.clone();
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> exportcast::Result<()> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Ingest => {
            let summary = commands::cmd_ingest(&config)?;
            for (country, count) in &summary.counts {
                println!("{country}: {count} quarterly points");
            }
            println!(
                "{} points x {} countries -> {}",
                summary.counts.first().map(|c| c.1).unwrap_or(0),
                summary.counts.len(),
                summary.quarterly_path.display()
            );
        }
        Command::Train => {
            let summary = commands::cmd_train(&config, cli.jobs)?;
            for (country, model, report) in &summary.trained {
                println!("{country}: {} + {}", model.display(), report.display());
            }
        }
        Command::Evaluate { kfold } => {
            let summary = commands::cmd_evaluate(&config, cli.jobs, *kfold)?;
            println!("metrics: {}", summary.metrics_path.display());
            println!("regression: {}", summary.regression_path.display());
        }
        Command::Forecast => {
            let summary = commands::cmd_forecast(&config, cli.jobs)?;
            println!(
                "forecast: {} ({} countries x {} quarters)",
                summary.forecast_path.display(),
                summary.table.countries.len(),
                summary.table.horizon
            );
            println!("plots: {}", summary.plots_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
