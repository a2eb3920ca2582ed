//! End-to-end runs of the four commands over a synthetic annual panel,
//! exercising the CLI binary and the file formats it produces.

use std::path::Path;
use std::process::Command;

use exportcast::ingest::CountryCode;
use exportcast::RunConfig;

fn code(s: &str) -> CountryCode {
    CountryCode::new(s).unwrap()
}

fn synthetic_long_csv(countries: &[CountryCode]) -> String {
    let mut out = String::from("country,year,value\n");
    for (i, country) in countries.iter().enumerate() {
        let base = 1.5e9 * (i + 1) as f64;
        for year in 1970..=2019 {
            let t = (year - 1970) as f64;
            let value = base * (0.08 * t).exp() * (1.0 + 0.15 * (t / 5.0).sin());
            out.push_str(&format!("{country},{year},{value}\n"));
        }
    }
    out
}

struct Workspace {
    _tmp: tempfile::TempDir,
    config_path: std::path::PathBuf,
    out_dir: std::path::PathBuf,
}

fn setup(countries: &[CountryCode]) -> Workspace {
    let tmp = tempfile::tempdir().unwrap();
    let data_path = tmp.path().join("annual.csv");
    std::fs::write(&data_path, synthetic_long_csv(countries)).unwrap();
    let out_dir = tmp.path().join("out");
    let config = RunConfig {
        countries: countries.to_vec(),
        data_path,
        output_dir: out_dir.clone(),
        seed: 7,
        ..RunConfig::default()
    };
    let config_path = tmp.path().join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    Workspace {
        _tmp: tmp,
        config_path,
        out_dir,
    }
}

fn exportcast(ws: &Workspace, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_exportcast"))
        .args(args)
        .arg("--config")
        .arg(&ws.config_path)
        .env_remove("EXPORTCAST_OUT")
        .output()
        .unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{path:?}: {e}"))
}

#[test]
fn full_pipeline_end_to_end() {
    let countries = [code("USA"), code("IRN")];
    let ws = setup(&countries);

    let out = exportcast(&ws, &["ingest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("200 points x 2 countries"), "{stdout}");
    let quarterly = read(&ws.out_dir.join("quarterly.csv"));
    assert_eq!(quarterly.lines().count(), 1 + 2 * 200);

    let out = exportcast(&ws, &["train"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for c in &countries {
        assert!(ws.out_dir.join(format!("models/{c}.mlp")).exists());
        let report = read(&ws.out_dir.join(format!("reports/{c}.json")));
        let parsed: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(parsed["report"]["config"]["epochs"], 200);
        assert_eq!(parsed["report"]["epoch_mse"].as_array().unwrap().len(), 200);
    }

    let out = exportcast(&ws, &["evaluate", "--kfold"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = read(&ws.out_dir.join("metrics.csv"));
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "country,split,mse,rmse,mape,mae");
    // per country: train + test + 5 fold rows
    assert_eq!(lines.len(), 1 + 2 * 7);
    assert!(lines.iter().any(|l| l.starts_with("USA,test,")));
    assert!(lines.iter().any(|l| l.starts_with("IRN,fold4,")));
    let regression = read(&ws.out_dir.join("regression.csv"));
    assert_eq!(regression.lines().next().unwrap(), "country,split,slope,intercept,r");

    let out = exportcast(&ws, &["forecast"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let forecast = read(&ws.out_dir.join("forecast.csv"));
    let lines: Vec<&str> = forecast.lines().collect();
    assert_eq!(lines[0], "year,quarter,USA,IRN");
    assert_eq!(lines.len(), 21);
    // data end 2019q4; 4 discarded bridge quarters put the table at 2021q1
    assert!(lines[1].starts_with("2021,q1,"));
    assert!(lines[20].starts_with("2025,q4,"));
    for line in &lines[1..] {
        for cell in line.split(',').skip(2) {
            assert!(cell.parse::<f64>().unwrap() > 0.0);
        }
    }
    for c in &countries {
        for suffix in ["mse", "series", "fit"] {
            assert!(ws.out_dir.join(format!("plots/{c}_{suffix}.svg")).exists());
        }
    }
}

#[test]
fn missing_data_file_exits_2() {
    let ws = setup(&[code("USA")]);
    // point the config at a nonexistent file
    let mut config: RunConfig =
        serde_json::from_str(&read(&ws.config_path)).unwrap();
    config.data_path = ws.out_dir.join("nope.csv");
    std::fs::write(&ws.config_path, serde_json::to_string(&config).unwrap()).unwrap();
    let out = exportcast(&ws, &["ingest"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn train_before_ingest_fails_with_context() {
    let ws = setup(&[code("USA")]);
    let out = exportcast(&ws, &["train"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_without_model_names_country() {
    let ws = setup(&[code("USA")]);
    assert!(exportcast(&ws, &["ingest"]).status.success());
    let out = exportcast(&ws, &["evaluate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("USA"));
}

#[test]
fn country_filter_restricts_run() {
    let countries = [code("USA"), code("IRN")];
    let ws = setup(&countries);
    assert!(exportcast(&ws, &["ingest"]).status.success());
    let out = exportcast(&ws, &["train", "--country", "USA"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ws.out_dir.join("models/USA.mlp").exists());
    assert!(!ws.out_dir.join("models/IRN.mlp").exists());
}

#[test]
fn seed_flag_overrides_config() {
    let ws = setup(&[code("USA")]);
    assert!(exportcast(&ws, &["ingest"]).status.success());
    assert!(exportcast(&ws, &["train", "--seed", "99"]).status.success());
    let report = read(&ws.out_dir.join("reports/USA.json"));
    let parsed: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(parsed["report"]["seed"], 99);
}

#[test]
fn env_var_overrides_output_dir() {
    let ws = setup(&[code("USA")]);
    let alt = ws.out_dir.parent().unwrap().join("alt_out");
    let out = Command::new(env!("CARGO_BIN_EXE_exportcast"))
        .args(["ingest", "--config"])
        .arg(&ws.config_path)
        .env("EXPORTCAST_OUT", &alt)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(alt.join("quarterly.csv").exists());
    assert!(!ws.out_dir.join("quarterly.csv").exists());
}

#[test]
fn jobs_flag_gives_same_artifacts() {
    let countries = [code("USA"), code("IRN"), code("GRC")];
    let ws = setup(&countries);
    assert!(exportcast(&ws, &["ingest"]).status.success());
    assert!(exportcast(&ws, &["train", "--jobs", "1"]).status.success());
    let serial: Vec<Vec<u8>> = countries
        .iter()
        .map(|c| std::fs::read(ws.out_dir.join(format!("models/{c}.mlp"))).unwrap())
        .collect();
    assert!(exportcast(&ws, &["train", "--jobs", "3"]).status.success());
    for (c, bytes) in countries.iter().zip(serial) {
        let parallel = std::fs::read(ws.out_dir.join(format!("models/{c}.mlp"))).unwrap();
        assert_eq!(bytes, parallel, "{c}");
    }
}
