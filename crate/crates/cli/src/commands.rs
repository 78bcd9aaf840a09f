//! The four batch commands: `fit`, `simulate`, `effect` and `summarize`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use ordqr::diagnostics::{covariate_effect, dic, summarize, Chain, ChainMeta, EffectChange, ModelKind};
use ordqr::or1::run_or1;
use ordqr::or2::run_or2;
use ordqr::simdata::{gen_study1, gen_study2};
use ordqr::{CutpointVector, McmcConfig, QuantileSpec, RngState};

use crate::data::{load_dataset, load_priors, LoadedData};
use crate::report::{
    read_diagnostics, read_draws_csv, write_diagnostics, write_dic_csv, write_draws_csv,
    write_effects_csv, write_summary_csv, ConfigEcho, DiagnosticsJson, DicRow,
};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Or1,
    Or2,
}

impl ModelChoice {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelChoice::Or1 => "or1",
            ModelChoice::Or2 => "or2",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub data: PathBuf,
    pub model: ModelChoice,
    pub response: String,
    pub covariates: Option<Vec<String>>,
    pub intercept: bool,
    pub quantiles: Vec<f64>,
    pub cutpoints: Option<Vec<f64>>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub iota: f64,
    pub priors: Option<PathBuf>,
    pub out: PathBuf,
    pub keep_draws: bool,
}

/// Fits the requested model at each quantile level and writes, per level,
/// `summary.csv`, `diagnostics.json` and optionally `draws.csv` under
/// `out/p<level>/`, plus a combined `dic_comparison.csv` sorted by fit.
pub fn run_fit(args: &FitArgs) -> CliResult<()> {
    if args.quantiles.is_empty() {
        return Err(CliError::Config("no quantile levels requested".into()));
    }
    for &p in &args.quantiles {
        if !(p > 0.0 && p < 1.0) {
            return Err(CliError::Config(format!("quantile level {p} outside (0, 1)")));
        }
    }
    let loaded = load_dataset(&args.data, &args.response, args.covariates.as_deref(), args.intercept)?;
    let data = &loaded.dataset;

    let fixed_cuts = match args.model {
        ModelChoice::Or1 => {
            if data.n_categories() < 4 {
                return Err(CliError::Config(format!(
                    "model or1 needs more than 3 response categories, data has {}; use --model or2",
                    data.n_categories()
                )));
            }
            if args.cutpoints.is_some() {
                return Err(CliError::Config(
                    "--cutpoints only applies to --model or2; or1 estimates its cut-points".into(),
                ));
            }
            None
        }
        ModelChoice::Or2 => {
            if data.n_categories() != 3 {
                return Err(CliError::Config(format!(
                    "model or2 needs exactly 3 response categories, data has {}",
                    data.n_categories()
                )));
            }
            let cuts = args.cutpoints.clone().unwrap_or_else(|| vec![0.0, 1.0]);
            if cuts.len() != 2 {
                return Err(CliError::Config(format!(
                    "--cutpoints expects exactly two values, got {}",
                    cuts.len()
                )));
            }
            Some(
                CutpointVector::or2_fixed(cuts[0], cuts[1])
                    .map_err(|e| CliError::Config(e.to_string()))?,
            )
        }
    };

    let prior = load_priors(args.priors.as_deref(), data.k(), data.n_categories())?;
    let config = McmcConfig {
        iterations: args.iterations,
        burn_in: args.burn_in,
        seed: args.seed,
        iota: args.iota,
        thin: args.thin,
    };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;

    std::fs::create_dir_all(&args.out)?;
    let echo = ConfigEcho {
        data: args.data.display().to_string(),
        response: args.response.clone(),
        covariates: args.covariates.clone().unwrap_or_default(),
        intercept: args.intercept,
        quantiles: args.quantiles.clone(),
        priors: args.priors.as_ref().map(|p| p.display().to_string()),
        keep_draws: args.keep_draws,
    };

    let mut dic_rows = Vec::with_capacity(args.quantiles.len());
    for (qi, &p) in args.quantiles.iter().enumerate() {
        let started = Instant::now();
        let spec = QuantileSpec::new(p).map_err(|e| CliError::Config(e.to_string()))?;
        let mut rng = RngState::substream(args.seed, qi as u64);
        let mut chain = match args.model {
            ModelChoice::Or1 => run_or1(data, &prior, &spec, &config, &mut rng)?,
            ModelChoice::Or2 => {
                run_or2(data, &prior, &spec, fixed_cuts.as_ref().unwrap(), &config, &mut rng)?
            }
        };
        for (j, name) in loaded.design_columns.iter().enumerate() {
            chain.names[j] = name.clone();
        }

        let rows = summarize(&chain)?;
        let d = dic(&chain, data, &spec)?;
        let p_dir = args.out.join(format!("p{p}"));
        std::fs::create_dir_all(&p_dir)?;
        write_summary_csv(&p_dir.join("summary.csv"), &rows)?;
        if args.keep_draws {
            write_draws_csv(&p_dir.join("draws.csv"), &chain.names, &chain.draws)?;
        }
        let diag = DiagnosticsJson {
            model: args.model.as_str().to_string(),
            p,
            dic: d.dic,
            p_d: d.p_d,
            dbar: d.dbar,
            acceptance_rate: chain.accept_rate,
            proposal_fallback: chain.meta.proposal_fallback,
            iterations: args.iterations,
            burn_in: args.burn_in,
            thin: args.thin,
            seed: args.seed,
            stream: qi as u64,
            iota: chain.meta.iota,
            cutpoints: chain.meta.fixed_cuts.clone(),
            n: data.n(),
            k: data.k(),
            n_categories: data.n_categories(),
            design_columns: loaded.design_columns.clone(),
            wall_time_seconds: started.elapsed().as_secs_f64(),
            config: echo.clone(),
        };
        write_diagnostics(&p_dir.join("diagnostics.json"), &diag)?;
        dic_rows.push(DicRow { p, dic: d.dic, p_d: d.p_d, dbar: d.dbar });
        println!("p={p}: dic={:.2} -> {}", d.dic, p_dir.display());
    }
    write_dic_csv(&args.out.join("dic_comparison.csv"), &mut dic_rows)?;
    Ok(())
}

/// Writes a synthetic dataset from one of the two reference designs as
/// `x1..xk,y`. Column `x1` is the designs' intercept column; fit with
/// `--no-intercept` to reuse it as-is.
pub fn run_simulate(study: u8, n: usize, seed: u64, out: &Path) -> CliResult<()> {
    let mut rng = RngState::from_seed(seed);
    let dataset = match study {
        1 => gen_study1(n, &mut rng)?,
        2 => gen_study2(n, &mut rng)?,
        other => return Err(CliError::Config(format!("unknown study {other}; use 1 or 2"))),
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    let mut header: Vec<String> = (1..=dataset.k()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(|e| CliError::Data(e.to_string()))?;
    for i in 0..dataset.n() {
        let mut row: Vec<String> = (0..dataset.k()).map(|j| format!("{}", dataset.x()[(i, j)])).collect();
        row.push(format!("{}", dataset.y()[i]));
        w.write_record(&row).map_err(|e| CliError::Data(e.to_string()))?;
    }
    w.flush()?;
    println!("wrote {} rows to {}", dataset.n(), out.display());
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EffectArgs {
    pub fit_dir: PathBuf,
    pub covariate: String,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub delta: Option<f64>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Average change in category probabilities for a covariate move, one
/// column per fitted quantile level, computed from the retained draws of a
/// previous fit.
pub fn run_effect(args: &EffectArgs) -> CliResult<()> {
    let change = match (args.from, args.to, args.delta) {
        (Some(from), Some(to), None) => EffectChange::Set { from, to },
        (None, None, Some(d)) => EffectChange::Shift(d),
        _ => {
            return Err(CliError::Config(
                "specify either --from and --to, or --delta alone".into(),
            ))
        }
    };

    let mut fits: Vec<(f64, PathBuf, DiagnosticsJson)> = Vec::new();
    for entry in std::fs::read_dir(&args.fit_dir)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.fit_dir.display())))?
    {
        let path = entry?.path();
        let diag_path = path.join("diagnostics.json");
        if path.is_dir() && diag_path.exists() {
            let diag = read_diagnostics(&diag_path)?;
            fits.push((diag.p, path, diag));
        }
    }
    if fits.is_empty() {
        return Err(CliError::Data(format!(
            "no completed fits found under {}",
            args.fit_dir.display()
        )));
    }
    fits.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

    // rebuild the dataset exactly as the fit saw it
    let first = &fits[0].2;
    let data_path = args.data.clone().unwrap_or_else(|| PathBuf::from(&first.config.data));
    let covariates =
        if first.config.covariates.is_empty() { None } else { Some(first.config.covariates.clone()) };
    let loaded: LoadedData =
        load_dataset(&data_path, &first.config.response, covariates.as_deref(), first.config.intercept)?;
    if loaded.dataset.k() != first.k || loaded.dataset.n_categories() != first.n_categories {
        return Err(CliError::Data(format!(
            "dataset at {} no longer matches the fit ({} columns, {} categories)",
            data_path.display(),
            first.k,
            first.n_categories
        )));
    }

    let covariate_idx = resolve_covariate(&args.covariate, &first.design_columns)?;
    let mut quantiles = Vec::with_capacity(fits.len());
    let mut effects = Vec::with_capacity(fits.len());
    for (p, dir, diag) in &fits {
        let draws_path = dir.join("draws.csv");
        if !draws_path.exists() {
            return Err(CliError::Data(format!(
                "{} has no draws.csv; re-run fit with --keep-draws to enable effect computation",
                dir.display()
            )));
        }
        let (names, draws) = read_draws_csv(&draws_path)?;
        let chain = chain_from_artifacts(names, draws, diag)?;
        let spec = QuantileSpec::new(*p).map_err(|e| CliError::Data(e.to_string()))?;
        let eff = covariate_effect(&chain, &loaded.dataset, &spec, covariate_idx, change)?;
        quantiles.push(*p);
        effects.push(eff);
    }

    let out = args.out.clone().unwrap_or_else(|| args.fit_dir.join("effects.csv"));
    write_effects_csv(&out, &quantiles, &effects)?;
    println!("wrote effect table to {}", out.display());
    Ok(())
}

fn resolve_covariate(name: &str, design_columns: &[String]) -> CliResult<usize> {
    if let Some(idx) = design_columns.iter().position(|c| c == name) {
        return Ok(idx);
    }
    if let Ok(idx) = name.parse::<usize>() {
        if idx < design_columns.len() {
            return Ok(idx);
        }
    }
    Err(CliError::Config(format!(
        "covariate '{name}' not found; design columns are {design_columns:?}"
    )))
}

fn chain_from_artifacts(
    names: Vec<String>,
    draws: DMatrix<f64>,
    diag: &DiagnosticsJson,
) -> CliResult<Chain> {
    let model = match diag.model.as_str() {
        "or1" => ModelKind::Or1,
        "or2" => ModelKind::Or2,
        other => return Err(CliError::Data(format!("unknown model tag '{other}'"))),
    };
    let expected = match model {
        ModelKind::Or1 => diag.k + diag.n_categories - 2,
        ModelKind::Or2 => diag.k + 1,
    };
    if draws.ncols() != expected {
        return Err(CliError::Data(format!(
            "draws.csv has {} columns but the fit implies {expected}",
            draws.ncols()
        )));
    }
    let rows = draws.nrows();
    Ok(Chain {
        draws,
        names,
        loglik_trace: vec![0.0; rows],
        accept_rate: diag.acceptance_rate,
        meta: ChainMeta {
            model,
            p: diag.p,
            seed: diag.seed,
            stream: diag.stream,
            iterations: diag.iterations,
            burn_in: diag.burn_in,
            thin: diag.thin,
            iota: diag.iota,
            proposal_fallback: diag.proposal_fallback,
            k: diag.k,
            n_categories: diag.n_categories,
            fixed_cuts: diag.cutpoints.clone(),
        },
    })
}

/// Re-summarizes a retained draws file into the summary-table schema.
pub fn run_summarize(draws_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let (names, draws) = read_draws_csv(draws_path)?;
    let rows = draws.nrows();
    let chain = Chain {
        draws,
        names,
        loglik_trace: vec![0.0; rows],
        accept_rate: None,
        meta: ChainMeta {
            model: ModelKind::Or1,
            p: 0.5,
            seed: 0,
            stream: 0,
            iterations: rows,
            burn_in: 0,
            thin: 1,
            iota: None,
            proposal_fallback: None,
            k: 0,
            n_categories: 0,
            fixed_cuts: None,
        },
    };
    let summary = summarize(&chain)?;
    match out {
        Some(path) => write_summary_csv(path, &summary)?,
        None => crate::report::write_summary_to(std::io::stdout().lock(), &summary)?,
    }
    Ok(())
}
