//! Posterior summaries, batch-means inefficiency factors, the deviance
//! information criterion and averaged covariate effects.

use nalgebra::{DMatrix, DVector};

use crate::dist::QuantileSpec;
use crate::error::{Error, Result};
use crate::model::{gamma_from_delta, ordinal_loglik, outcome_probs, CutpointVector, OrdinalDataset, TransformedCutpoints};

/// Which sampler produced a chain; decides how its columns are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Variance-restricted model: columns are coefficients then transformed
    /// cut-points.
    Or1,
    /// Fixed-cut-point model: columns are coefficients then the scale.
    Or2,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Or1 => "or1",
            ModelKind::Or2 => "or2",
        }
    }
}

/// Provenance of a chain: enough to rebuild summaries and effects from the
/// stored draws alone.
#[derive(Debug, Clone)]
pub struct ChainMeta {
    pub model: ModelKind,
    pub p: f64,
    pub seed: u64,
    pub stream: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Proposal scaling of the cut-point step (first model only).
    pub iota: Option<f64>,
    /// Whether proposal tuning fell back to the identity matrix.
    pub proposal_fallback: Option<bool>,
    pub k: usize,
    pub n_categories: usize,
    /// Interior fixed cut-points (second model only).
    pub fixed_cuts: Option<Vec<f64>>,
}

/// Stored post-burn-in draws, one parameter per column, with the per-draw
/// log-likelihood alongside.
#[derive(Debug, Clone)]
pub struct Chain {
    pub draws: DMatrix<f64>,
    pub names: Vec<String>,
    pub loglik_trace: Vec<f64>,
    /// Metropolis-Hastings acceptance rate of the cut-point block, when the
    /// sampler has one.
    pub accept_rate: Option<f64>,
    pub meta: ChainMeta,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.nrows() == 0
    }

    /// Posterior means of the coefficient columns.
    pub fn beta_mean(&self) -> DVector<f64> {
        let k = self.meta.k;
        DVector::from_fn(k, |j, _| self.draws.column(j).mean())
    }

    /// Parameter draws of row `g`, split into the coefficient part and the
    /// model-specific remainder.
    fn row_parts(&self, g: usize) -> (DVector<f64>, DVector<f64>) {
        let k = self.meta.k;
        let beta = DVector::from_fn(k, |j, _| self.draws[(g, j)]);
        let rest = DVector::from_fn(self.draws.ncols() - k, |j, _| self.draws[(g, k + j)]);
        (beta, rest)
    }
}

/// One row of a posterior summary table.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    /// Batch-means inefficiency factor; absent for a degenerate (constant)
    /// series.
    pub if_factor: Option<f64>,
    pub q2_5: f64,
    pub median: f64,
    pub q97_5: f64,
}

/// Batch-means inefficiency factor: the series is cut into `floor(M/m)`
/// batches of size `m` (default `floor(sqrt(M))`) and the factor is
/// `m * Var(batch means) / Var(series)`, using sample variances. A constant
/// series is reported as degenerate.
pub fn inefficiency_factor(series: &[f64], batch_size: Option<usize>) -> Result<f64> {
    let m_len = series.len();
    let m = batch_size.unwrap_or_else(|| (m_len as f64).sqrt().floor() as usize);
    if m == 0 {
        return Err(Error::Parameter("batch size must be positive".into()));
    }
    if m_len < 4 * m {
        return Err(Error::Parameter(format!(
            "need at least 4 batches: series length {m_len}, batch size {m}"
        )));
    }
    let var_series = sample_variance(series);
    if var_series <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let n_batches = m_len / m;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| series[b * m..(b + 1) * m].iter().sum::<f64>() / m as f64)
        .collect();
    let var_means = sample_variance(&means);
    Ok(m as f64 * var_means / var_series)
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Deviance information criterion with its ingredients.
#[derive(Debug, Clone, Copy)]
pub struct Dic {
    pub dic: f64,
    /// Effective number of parameters `p_D = Dbar - D(theta_bar)`.
    pub p_d: f64,
    /// Posterior mean deviance.
    pub dbar: f64,
}

/// `DIC = D(theta_bar) + 2 p_D` with the plug-in at the posterior mean of
/// the stored parameters (cut-points averaged in the transformed space).
///
/// Sentinel draws with log-likelihood negative infinity are excluded with a
/// warning; more than 0.1% of them is an error.
pub fn dic(chain: &Chain, data: &OrdinalDataset, spec: &QuantileSpec) -> Result<Dic> {
    if chain.is_empty() {
        return Err(Error::Domain("empty chain".into()));
    }
    if chain.loglik_trace.len() != chain.len() {
        return Err(Error::Domain(format!(
            "log-likelihood trace length {} but {} draws",
            chain.loglik_trace.len(),
            chain.len()
        )));
    }
    let finite: Vec<f64> = chain.loglik_trace.iter().copied().filter(|v| v.is_finite()).collect();
    let dropped = chain.loglik_trace.len() - finite.len();
    if dropped > 0 {
        let frac = dropped as f64 / chain.loglik_trace.len() as f64;
        if frac > 0.001 {
            return Err(Error::Numerical(format!(
                "{dropped} of {} log-likelihood values are non-finite",
                chain.loglik_trace.len()
            )));
        }
        log::warn!("excluding {dropped} sentinel log-likelihood values from the deviance");
    }
    if finite.is_empty() {
        return Err(Error::Numerical("no finite log-likelihood values".into()));
    }
    let dbar = -2.0 * finite.iter().sum::<f64>() / finite.len() as f64;

    let ll_at_mean = loglik_at_posterior_mean(chain, data, spec)?;
    if !ll_at_mean.is_finite() {
        return Err(Error::Numerical("log-likelihood at the posterior mean is not finite".into()));
    }
    let d_at_mean = -2.0 * ll_at_mean;
    let p_d = dbar - d_at_mean;
    Ok(Dic { dic: d_at_mean + 2.0 * p_d, p_d, dbar })
}

fn loglik_at_posterior_mean(chain: &Chain, data: &OrdinalDataset, spec: &QuantileSpec) -> Result<f64> {
    let beta = chain.beta_mean();
    match chain.meta.model {
        ModelKind::Or1 => {
            let k = chain.meta.k;
            let free = chain.draws.ncols() - k;
            let delta_bar = DVector::from_fn(free, |j, _| chain.draws.column(k + j).mean());
            let cuts = gamma_from_delta(&TransformedCutpoints { delta: delta_bar }, chain.meta.n_categories)?;
            ordinal_loglik(&beta, &cuts, 1.0, spec, data)
        }
        ModelKind::Or2 => {
            let sigma_bar = chain.draws.column(chain.meta.k).mean();
            let cuts = fixed_cuts_from_meta(chain)?;
            ordinal_loglik(&beta, &cuts, sigma_bar, spec, data)
        }
    }
}

fn fixed_cuts_from_meta(chain: &Chain) -> Result<CutpointVector> {
    let interior = chain
        .meta
        .fixed_cuts
        .as_ref()
        .ok_or_else(|| Error::Domain("chain metadata lacks the fixed cut-points".into()))?;
    CutpointVector::new(interior)
}

/// How a covariate is perturbed when computing an effect.
#[derive(Debug, Clone, Copy)]
pub enum EffectChange {
    /// Set the covariate to `from`, then to `to`.
    Set { from: f64, to: f64 },
    /// Leave observed values as the baseline and add `delta`.
    Shift(f64),
}

/// Average change in category probabilities for a covariate move,
/// marginalized over the posterior draws and the observed covariate rows.
/// The entries sum to zero.
pub fn covariate_effect(
    chain: &Chain,
    data: &OrdinalDataset,
    spec: &QuantileSpec,
    covariate: usize,
    change: EffectChange,
) -> Result<Vec<f64>> {
    if covariate >= data.k() {
        return Err(Error::Domain(format!("covariate index {covariate} out of 0..{}", data.k())));
    }
    if chain.meta.k != data.k() {
        return Err(Error::Domain(format!(
            "chain has k = {} but data has k = {}",
            chain.meta.k,
            data.k()
        )));
    }
    let j = data.n_categories();
    let mut acc = vec![0.0; j];
    let fixed_cuts = match chain.meta.model {
        ModelKind::Or2 => Some(fixed_cuts_from_meta(chain)?),
        ModelKind::Or1 => None,
    };
    for g in 0..chain.len() {
        let (beta, rest) = chain.row_parts(g);
        let (cuts, scale) = match chain.meta.model {
            ModelKind::Or1 => {
                let cuts = gamma_from_delta(
                    &TransformedCutpoints { delta: rest },
                    chain.meta.n_categories,
                )?;
                (cuts, 1.0)
            }
            ModelKind::Or2 => (fixed_cuts.clone().unwrap(), rest[0]),
        };
        for i in 0..data.n() {
            let mut x_from = data.x().row(i).transpose();
            let mut x_to = x_from.clone();
            match change {
                EffectChange::Set { from, to } => {
                    x_from[covariate] = from;
                    x_to[covariate] = to;
                }
                EffectChange::Shift(d) => {
                    x_to[covariate] += d;
                }
            }
            let p_from = outcome_probs(&x_from, &beta, &cuts, scale, spec)?;
            let p_to = outcome_probs(&x_to, &beta, &cuts, scale, spec)?;
            for c in 0..j {
                acc[c] += p_to[c] - p_from[c];
            }
        }
    }
    let denom = (chain.len() * data.n()) as f64;
    Ok(acc.into_iter().map(|v| v / denom).collect())
}

/// Per-parameter mean, standard deviation, inefficiency factor and empirical
/// quantiles (2.5%, 50%, 97.5%).
pub fn summarize(chain: &Chain) -> Result<Vec<SummaryRow>> {
    if chain.len() < 2 {
        return Err(Error::Domain(format!("need at least 2 draws to summarize, got {}", chain.len())));
    }
    let mut rows = Vec::with_capacity(chain.names.len());
    for (j, name) in chain.names.iter().enumerate() {
        let col: Vec<f64> = chain.draws.column(j).iter().copied().collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let std = sample_variance(&col).sqrt();
        let if_factor = match inefficiency_factor(&col, None) {
            Ok(v) => Some(v),
            Err(Error::DegenerateSeries) => None,
            Err(e) => return Err(e),
        };
        let mut sorted = col;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        rows.push(SummaryRow {
            name: name.clone(),
            mean,
            std,
            if_factor,
            q2_5: empirical_quantile(&sorted, 0.025),
            median: empirical_quantile(&sorted, 0.5),
            q97_5: empirical_quantile(&sorted, 0.975),
        });
    }
    Ok(rows)
}

/// Linear-interpolation quantile of an already sorted slice.
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
