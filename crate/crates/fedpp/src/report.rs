//! CSV and JSON result tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::montecarlo::Summary;
use crate::scenario::ScenarioConfig;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format {s:?}, expected csv or json")),
        }
    }
}

pub const STRATEGY_COLUMNS: [&str; 6] = [
    "strategy",
    "effort",
    "mean_payment",
    "se_payment",
    "mean_utility",
    "slash_rate",
];

const CLIENT_COLUMNS: [&str; 6] = [
    "client",
    "strategy",
    "effort",
    "mean_payment",
    "mean_utility",
    "slash_rate",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a ScenarioConfig,
    #[serde(flatten)]
    summary: &'a Summary,
}

/// Writes `strategies.csv` and `clients.csv`, or a single `report.json`
/// echoing the scenario. Returns the written paths.
pub fn emit_report(summary: &Summary, cfg: &ScenarioConfig, format: Format, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    match format {
        Format::Csv => {
            let strategies = out_dir.join("strategies.csv");
            let rows = summary
                .groups
                .iter()
                .map(|g| {
                    vec![
                        g.strategy.clone(),
                        g.effort.to_string(),
                        g.mean_payment.to_string(),
                        opt(g.se_payment),
                        g.mean_utility.to_string(),
                        g.slash_rate.to_string(),
                    ]
                })
                .collect();
            write_csv(&strategies, &STRATEGY_COLUMNS, rows)?;
            let clients = out_dir.join("clients.csv");
            let rows = summary
                .clients
                .iter()
                .map(|c| {
                    vec![
                        c.client.clone(),
                        c.strategy.clone(),
                        c.effort.to_string(),
                        c.mean_payment.to_string(),
                        c.mean_utility.to_string(),
                        c.slash_rate.to_string(),
                    ]
                })
                .collect();
            write_csv(&clients, &CLIENT_COLUMNS, rows)?;
            Ok(vec![strategies, clients])
        }
        Format::Json => {
            let path = out_dir.join("report.json");
            let doc = JsonReport { config: cfg, summary };
            let text = serde_json::to_string_pretty(&doc).map_err(|source| HarnessError::Json {
                path: path.clone(),
                source,
            })?;
            fs::write(&path, text + "\n").map_err(|e| HarnessError::io(&path, e))?;
            Ok(vec![path])
        }
    }
}
