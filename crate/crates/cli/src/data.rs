//! CSV ingestion and prior-file parsing.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use ordqr::{OrdinalDataset, PriorSpec};
use serde::Deserialize;

use crate::{CliError, CliResult};

/// A parsed dataset plus the design-matrix column names (including the
/// intercept when one was added) and the response relabeling that was
/// applied.
#[derive(Debug)]
pub struct LoadedData {
    pub dataset: OrdinalDataset,
    pub design_columns: Vec<String>,
    /// Original response codes in ascending order; position `j` maps to
    /// category `j + 1`.
    pub label_map: Vec<i64>,
}

/// Reads a headered, comma-separated file: the response column is coerced
/// to integer categories and relabeled to `1..=J` preserving order, the
/// covariates are parsed as finite reals, and a ones column is prepended
/// unless `intercept` is false. Column selection defaults to every
/// non-response column in header order.
pub fn load_dataset(
    path: &Path,
    response: &str,
    covariates: Option<&[String]>,
    intercept: bool,
) -> CliResult<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let response_idx = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| CliError::Data(format!("response column '{response}' not found in {}", path.display())))?;

    let covariate_names: Vec<String> = match covariates {
        Some(names) => {
            let mut seen = std::collections::BTreeSet::new();
            for name in names {
                if name == response {
                    return Err(CliError::Config(format!(
                        "covariate list contains the response column '{response}'"
                    )));
                }
                if !seen.insert(name.clone()) {
                    return Err(CliError::Config(format!("covariate '{name}' listed twice")));
                }
            }
            names.to_vec()
        }
        None => headers.iter().filter(|h| *h != response).cloned().collect(),
    };
    if covariate_names.is_empty() {
        return Err(CliError::Config("no covariate columns selected".into()));
    }
    let covariate_idx: Vec<usize> = covariate_names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::Data(format!("covariate column '{name}' not found in {}", path.display())))
        })
        .collect::<CliResult<_>>()?;

    let mut raw_labels: Vec<i64> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Data(format!("{} row {}: {e}", path.display(), r + 1)))?;
        let cell = |idx: usize, name: &str| -> CliResult<f64> {
            let text = record.get(idx).ok_or_else(|| {
                CliError::Data(format!("row {}, column '{name}': missing cell", r + 1))
            })?;
            let value: f64 = text.trim().parse().map_err(|_| {
                CliError::Data(format!("row {}, column '{name}': cannot parse '{text}' as a number", r + 1))
            })?;
            if !value.is_finite() {
                return Err(CliError::Data(format!(
                    "row {}, column '{name}': '{text}' is not a finite number",
                    r + 1
                )));
            }
            Ok(value)
        };
        let y = cell(response_idx, response)?;
        if y.fract() != 0.0 || y.abs() > i64::MAX as f64 {
            return Err(CliError::Data(format!(
                "row {}, column '{response}': '{y}' is not an integer category",
                r + 1
            )));
        }
        raw_labels.push(y as i64);
        let row: Vec<f64> = covariate_idx
            .iter()
            .zip(covariate_names.iter())
            .map(|(&idx, name)| cell(idx, name))
            .collect::<CliResult<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{} contains no data rows", path.display())));
    }

    // relabel distinct response codes to 1..=J preserving order
    let mut code_to_label: BTreeMap<i64, usize> = BTreeMap::new();
    for &code in &raw_labels {
        code_to_label.entry(code).or_insert(0);
    }
    if code_to_label.len() < 2 {
        return Err(CliError::Data(format!(
            "response column '{response}' has a single category ({})",
            raw_labels[0]
        )));
    }
    for (j, (_, slot)) in code_to_label.iter_mut().enumerate() {
        *slot = j + 1;
    }
    let label_map: Vec<i64> = code_to_label.keys().copied().collect();
    if label_map.iter().enumerate().any(|(j, &code)| code != j as i64 + 1) {
        log::info!(
            "relabeled response codes {:?} to 1..={}",
            label_map,
            code_to_label.len()
        );
    }
    let y: Vec<usize> = raw_labels.iter().map(|code| code_to_label[code]).collect();

    let k_file = covariate_names.len();
    let k = k_file + usize::from(intercept);
    let n = rows.len();
    let x = DMatrix::from_fn(n, k, |i, j| {
        if intercept {
            if j == 0 {
                1.0
            } else {
                rows[i][j - 1]
            }
        } else {
            rows[i][j]
        }
    });
    let mut design_columns = Vec::with_capacity(k);
    if intercept {
        design_columns.push("intercept".to_string());
    }
    design_columns.extend(covariate_names);

    let dataset = OrdinalDataset::new(x, y, code_to_label.len()).map_err(CliError::from)?;
    Ok(LoadedData { dataset, design_columns, label_map })
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MatOrScalar {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

/// Prior file: JSON with any of `beta_mean`, `beta_cov`, `delta_mean`,
/// `delta_cov`, `n0`, `d0`. Covariance entries accept either a full matrix
/// or a scalar multiplying the identity. Missing keys keep the defaults
/// (`beta ~ N(0, I)`, `delta ~ N(0, 0.25 I)`, `sigma ~ IG(5/2, 8/2)`).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorsFile {
    beta_mean: Option<Vec<f64>>,
    beta_cov: Option<MatOrScalar>,
    delta_mean: Option<Vec<f64>>,
    delta_cov: Option<MatOrScalar>,
    n0: Option<f64>,
    d0: Option<f64>,
}

pub fn load_priors(path: Option<&Path>, k: usize, n_categories: usize) -> CliResult<PriorSpec> {
    let mut prior = PriorSpec::default_for(k, n_categories);
    let Some(path) = path else {
        return Ok(prior);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read priors file {}: {e}", path.display())))?;
    let file: PriorsFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("priors file {}: {e}", path.display())))?;

    if let Some(mean) = file.beta_mean {
        prior.beta_mean = DVector::from_vec(mean);
    }
    if let Some(cov) = file.beta_cov {
        prior.beta_cov = expand_cov(cov, k, "beta_cov")?;
    }
    if let Some(mean) = file.delta_mean {
        prior.delta_mean = DVector::from_vec(mean);
    }
    if let Some(cov) = file.delta_cov {
        let free = n_categories.saturating_sub(2).max(1);
        prior.delta_cov = expand_cov(cov, free, "delta_cov")?;
    }
    if let Some(n0) = file.n0 {
        prior.sigma_shape_n0 = n0;
    }
    if let Some(d0) = file.d0 {
        prior.sigma_rate_d0 = d0;
    }
    prior
        .validate(k, n_categories)
        .map_err(|e| CliError::Config(format!("priors file {}: {e}", path.display())))?;
    Ok(prior)
}

fn expand_cov(spec: MatOrScalar, dim: usize, what: &str) -> CliResult<DMatrix<f64>> {
    match spec {
        MatOrScalar::Scalar(s) => {
            if !(s > 0.0) {
                return Err(CliError::Config(format!("{what}: scalar {s} must be positive")));
            }
            Ok(DMatrix::identity(dim, dim) * s)
        }
        MatOrScalar::Matrix(rows) => {
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(CliError::Config(format!("{what}: expected a {dim}x{dim} matrix")));
            }
            Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
        }
    }
}
