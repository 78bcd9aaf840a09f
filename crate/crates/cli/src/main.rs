use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ordqr_cli::commands::{run_effect, run_fit, run_simulate, run_summarize, EffectArgs, FitArgs, ModelChoice};

/// Bayesian quantile regression for ordinal outcomes.
///
/// Fits latent-variable quantile models to ordered categorical responses by
/// MCMC and writes summary tables, model-comparison criteria and
/// covariate-effect tables as CSV/JSON artifacts. Outputs are reproducible:
/// the same data, configuration and seed give byte-identical tables.
#[derive(Parser)]
#[command(name = "ordqr", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// More than three categories; variance fixed, cut-points estimated.
    Or1,
    /// Exactly three categories; both cut-points fixed, scale estimated.
    Or2,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a quantile ordinal model at one or more quantile levels.
    Fit {
        /// Input CSV with a header row.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Response column name.
        #[arg(long, default_value = "y")]
        response: String,
        /// Comma-separated covariate columns; default: all non-response columns.
        #[arg(long, value_delimiter = ',')]
        covariates: Option<Vec<String>>,
        /// Do not prepend a ones column to the design matrix.
        #[arg(long = "no-intercept", default_value_t = false)]
        no_intercept: bool,
        /// Comma-separated quantile levels in (0,1).
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        quantiles: Vec<f64>,
        /// Two fixed cut-points for --model or2 (default 0,1).
        #[arg(long, value_delimiter = ',')]
        cutpoints: Option<Vec<f64>>,
        /// Total MCMC sweeps including burn-in.
        #[arg(long, default_value_t = 12_000)]
        iterations: usize,
        #[arg(long = "burnin", default_value_t = 3_000)]
        burn_in: usize,
        /// Keep every thin-th post-burn-in draw.
        #[arg(long, default_value_t = 1)]
        thin: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random-walk proposal scaling for the cut-point step (or1).
        #[arg(long, default_value_t = ordqr::DEFAULT_IOTA)]
        iota: f64,
        /// JSON file overriding the default priors.
        #[arg(long)]
        priors: Option<PathBuf>,
        /// Output directory; one subdirectory per quantile level.
        #[arg(long)]
        out: PathBuf,
        /// Also write the thinned parameter draws (needed by `effect`).
        #[arg(long = "keep-draws", default_value_t = false)]
        keep_draws: bool,
    },
    /// Generate a synthetic dataset from one of the two reference designs.
    Simulate {
        /// Design 1 (four categories) or 2 (three categories).
        #[arg(long)]
        study: u8,
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Average covariate effect on category probabilities from a kept fit.
    Effect {
        /// Output directory of a previous `fit --keep-draws`.
        #[arg(long)]
        fit: PathBuf,
        /// Design column name (or index) to perturb.
        #[arg(long)]
        covariate: String,
        /// Baseline value (with --to).
        #[arg(long)]
        from: Option<f64>,
        /// Comparison value (with --from).
        #[arg(long)]
        to: Option<f64>,
        /// Additive change applied to observed values (alternative to --from/--to).
        #[arg(long)]
        delta: Option<f64>,
        /// Override the dataset path recorded in the fit.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output CSV (default: <fit>/effects.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-summarize a retained draws.csv.
    Summarize {
        #[arg(long)]
        draws: PathBuf,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit {
            data,
            model,
            response,
            covariates,
            no_intercept,
            quantiles,
            cutpoints,
            iterations,
            burn_in,
            thin,
            seed,
            iota,
            priors,
            out,
            keep_draws,
        } => run_fit(&FitArgs {
            data,
            model: match model {
                Model::Or1 => ModelChoice::Or1,
                Model::Or2 => ModelChoice::Or2,
            },
            response,
            covariates,
            intercept: !no_intercept,
            quantiles,
            cutpoints,
            iterations,
            burn_in,
            thin,
            seed,
            iota,
            priors,
            out,
            keep_draws,
        }),
        Command::Simulate { study, n, seed, out } => run_simulate(study, n, seed, &out),
        Command::Effect { fit, covariate, from, to, delta, data, out } => run_effect(&EffectArgs {
            fit_dir: fit,
            covariate,
            from,
            to,
            delta,
            data,
            out,
        }),
        Command::Summarize { draws, out } => run_summarize(&draws, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.message() }
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
