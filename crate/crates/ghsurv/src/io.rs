//! Dataset ingestion from CSV, report serialization, and the flat key-value
//! scenario configuration format.

use crate::error::{Error, Result};
use crate::model::SurvivalDataset;
use crate::profile::ProfileCurve;
use crate::simulation::{scenario, ClassificationTable, ScenarioSpec};
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Column mapping for a survival CSV: which columns hold time and status,
/// which covariates enter each level, and which get standardized on load.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub time: String,
    pub status: String,
    pub hazard_covariates: Vec<String>,
    pub time_covariates: Vec<String>,
    pub standardize: Vec<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            time: "time".into(),
            status: "status".into(),
            hazard_covariates: vec![],
            time_covariates: vec![],
            standardize: vec![],
        }
    }
}

/// One parsed CSV column, either numeric or a to-be-encoded factor.
fn parse_column(name: &str, raw: &[String]) -> Result<Vec<f64>> {
    let numeric: Option<Vec<f64>> = raw.iter().map(|s| s.trim().parse::<f64>().ok()).collect();
    if let Some(v) = numeric {
        return Ok(v);
    }
    // binary factor: encode the two levels 0/1 in sorted order
    let mut levels: Vec<&str> = raw.iter().map(|s| s.trim()).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() == 2 {
        let hi = levels[1];
        return Ok(raw.iter().map(|s| f64::from(s.trim() == hi)).collect());
    }
    Err(Error::Ingestion(format!(
        "column '{name}' is neither numeric nor a two-level factor ({} levels)",
        levels.len()
    )))
}

/// Sample standard deviation (ddof = 1) z-scoring.
fn standardize(v: &mut [f64], name: &str) -> Result<()> {
    let n = v.len();
    if n < 2 {
        return Err(Error::Ingestion(format!(
            "cannot standardize column '{name}' with fewer than 2 rows"
        )));
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::Ingestion(format!(
            "column '{name}' is constant; cannot standardize"
        )));
    }
    let sd = var.sqrt();
    for x in v {
        *x = (*x - mean) / sd;
    }
    Ok(())
}

/// Load a survival dataset from a headered CSV using the column mapping.
pub fn load_dataset(path: &Path, map: &ColumnMap) -> Result<SurvivalDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let col_idx = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Ingestion(format!("column '{name}' not found in {path:?}")))
    };

    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(Error::Ingestion(format!("no data rows in {path:?}")));
    }
    if rows.iter().any(|r| r.len() != headers.len()) {
        return Err(Error::Ingestion("ragged CSV: row width differs from header".into()));
    }

    let column = |name: &str| -> Result<Vec<String>> {
        let i = col_idx(name)?;
        Ok(rows.iter().map(|r| r[i].clone()).collect())
    };

    let times = parse_column(&map.time, &column(&map.time)?)?;
    let status_raw = parse_column(&map.status, &column(&map.status)?)?;
    let status: Vec<u8> = status_raw
        .iter()
        .map(|&v| {
            if v == 0.0 {
                Ok(0u8)
            } else if v == 1.0 {
                Ok(1u8)
            } else {
                Err(Error::Ingestion(format!(
                    "status column '{}' contains value {v}, expected 0 or 1",
                    map.status
                )))
            }
        })
        .collect::<Result<_>>()?;

    let mut cache: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for name in map
        .hazard_covariates
        .iter()
        .chain(map.time_covariates.iter())
    {
        if !cache.contains_key(name) {
            let mut v = parse_column(name, &column(name)?)?;
            if map.standardize.iter().any(|s| s == name) {
                standardize(&mut v, name)?;
            }
            cache.insert(name.clone(), v);
        }
    }

    let n = times.len();
    let build = |names: &[String]| -> DMatrix<f64> {
        DMatrix::from_fn(n, names.len(), |i, j| cache[&names[j]][i])
    };
    let x = build(&map.hazard_covariates);
    let xtilde = build(&map.time_covariates);
    SurvivalDataset::with_names(
        times,
        status,
        x,
        xtilde,
        map.hazard_covariates.clone(),
        map.time_covariates.clone(),
    )
}

/// Pretty JSON to a file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string_pretty(value)?;
    std::fs::write(path, s + "\n")?;
    Ok(())
}

/// Profile curves as plot-ready CSV: param, psi, rel_profile (blank where
/// the inner maximization failed).
pub fn write_profile_csv(path: &Path, curves: &[ProfileCurve]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["param", "psi", "rel_profile"])?;
    for c in curves {
        for (psi, rel) in c.grid.iter().zip(&c.rel_profile) {
            let cell = rel.map_or(String::new(), |v| format!("{v:.12e}"));
            w.write_record([c.param_name.as_str(), &format!("{psi:.12e}"), &cell])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Classification table as CSV: one row per method with the four cell counts.
pub fn write_classification_csv(path: &Path, table: &ClassificationTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "nr_pni", "nr_only", "pni_only", "neither", "failures"])?;
    for (name, cells) in [
        ("hellinger", &table.hellinger),
        ("kl", &table.kl),
        ("hessian", &table.hessian),
    ] {
        w.write_record([
            name,
            &cells.nr_pni.to_string(),
            &cells.nr_only.to_string(),
            &cells.pni_only.to_string(),
            &cells.neither.to_string(),
            &table.replicate_failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a flat key-value scenario configuration:
///
/// ```text
/// scenario = 2
/// n = 250
/// censoring = 0.3
/// replicates = 50
/// seed = 42
/// ```
///
/// Lines starting with '#' and blank lines are ignored.
pub fn parse_scenario_config(text: &str) -> Result<ScenarioSpec> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Ingestion(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        kv.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    let get = |key: &str| -> Result<&String> {
        kv.get(key)
            .ok_or_else(|| Error::Ingestion(format!("scenario config missing '{key}'")))
    };
    let parse_num = |key: &str| -> Result<f64> {
        get(key)?
            .parse::<f64>()
            .map_err(|_| Error::Ingestion(format!("scenario config: '{key}' is not a number")))
    };
    let id = parse_num("scenario")? as u8;
    let n = parse_num("n")? as usize;
    let censoring = parse_num("censoring")?;
    let replicates = kv
        .get("replicates")
        .map(|v| v.parse::<usize>())
        .transpose()
        .map_err(|_| Error::Ingestion("scenario config: bad 'replicates'".into()))?
        .unwrap_or(50);
    let seed = kv
        .get("seed")
        .map(|v| v.parse::<u64>())
        .transpose()
        .map_err(|_| Error::Ingestion("scenario config: bad 'seed'".into()))?
        .unwrap_or(20260822);
    scenario(id, n, censoring, replicates, seed)
}
