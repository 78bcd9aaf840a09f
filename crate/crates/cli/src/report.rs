//! Artifact writers and readers. Summary-style tables use six significant
//! digits; draw files keep full (round-trip) precision so chains can be
//! reloaded losslessly.

use std::path::Path;

use nalgebra::DMatrix;
use ordqr::SummaryRow;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

/// Fixed-significant-digit formatting: positional notation for moderate
/// exponents, scientific otherwise.
pub fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return format!("{:.*}", sig - 1, 0.0);
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..=8).contains(&exponent) {
        let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", sig - 1, x)
    }
}

fn sig6(x: f64) -> String {
    fmt_sig(x, 6)
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let file = std::fs::File::create(path)?;
    write_summary_to(file, rows).map_err(|e| CliError::Data(format!("{}: {}", path.display(), e.message())))
}

pub fn write_summary_to<W: std::io::Write>(sink: W, rows: &[SummaryRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["parameter", "mean", "std", "if", "q2.5", "q50", "q97.5"])
        .map_err(|e| CliError::Data(e.to_string()))?;
    for row in rows {
        let if_text = row.if_factor.map(sig6).unwrap_or_default();
        w.write_record([
            row.name.as_str(),
            &sig6(row.mean),
            &sig6(row.std),
            &if_text,
            &sig6(row.q2_5),
            &sig6(row.median),
            &sig6(row.q97_5),
        ])
        .map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_draws_csv(path: &Path, names: &[String], draws: &DMatrix<f64>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(names).map_err(csv_err(path))?;
    for i in 0..draws.nrows() {
        let row: Vec<String> = (0..draws.ncols()).map(|j| format!("{}", draws[(i, j)])).collect();
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_draws_csv(path: &Path) -> CliResult<(Vec<String>, DMatrix<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err(path))?;
    let names: Vec<String> = reader.headers().map_err(csv_err(path))?.iter().map(String::from).collect();
    let mut values: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(csv_err(path))?;
        for cell in record.iter() {
            values.push(cell.parse().map_err(|_| {
                CliError::Data(format!("{}: cannot parse '{cell}' as a number", path.display()))
            })?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::Data(format!("{}: no draws", path.display())));
    }
    Ok((names.clone(), DMatrix::from_row_slice(rows, names.len(), &values)))
}

/// Per-category effect table: one row per outcome category, one column per
/// quantile level.
pub fn write_effects_csv(path: &Path, quantiles: &[f64], effects: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["category".to_string()];
    header.extend(quantiles.iter().map(|p| format!("p{p}")));
    w.write_record(&header).map_err(csv_err(path))?;
    let n_categories = effects.first().map(|e| e.len()).unwrap_or(0);
    for c in 0..n_categories {
        let mut row = vec![format!("{}", c + 1)];
        row.extend(effects.iter().map(|col| sig6(col[c])));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the cross-quantile model comparison.
pub struct DicRow {
    pub p: f64,
    pub dic: f64,
    pub p_d: f64,
    pub dbar: f64,
}

pub fn write_dic_csv(path: &Path, rows: &mut [DicRow]) -> CliResult<()> {
    rows.sort_by(|a, b| a.dic.partial_cmp(&b.dic).unwrap_or(std::cmp::Ordering::Equal));
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(["p", "dic", "p_d", "dbar"]).map_err(csv_err(path))?;
    for row in rows.iter() {
        w.write_record([format!("{}", row.p), sig6(row.dic), sig6(row.p_d), sig6(row.dbar)])
            .map_err(csv_err(path))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

/// Configuration echo embedded in each diagnostics file; enough to rebuild
/// the dataset and chain for later effect computations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub data: String,
    pub response: String,
    pub covariates: Vec<String>,
    pub intercept: bool,
    pub quantiles: Vec<f64>,
    pub priors: Option<String>,
    pub keep_draws: bool,
}

/// Per-quantile fit record written alongside the summary table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsJson {
    pub model: String,
    pub p: f64,
    pub dic: f64,
    pub p_d: f64,
    pub dbar: f64,
    pub acceptance_rate: Option<f64>,
    pub proposal_fallback: Option<bool>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub stream: u64,
    pub iota: Option<f64>,
    pub cutpoints: Option<Vec<f64>>,
    pub n: usize,
    pub k: usize,
    pub n_categories: usize,
    pub design_columns: Vec<String>,
    pub wall_time_seconds: f64,
    pub config: ConfigEcho,
}

pub fn write_diagnostics(path: &Path, diag: &DiagnosticsJson) -> CliResult<()> {
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(file, diag)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> CliResult<DiagnosticsJson> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
