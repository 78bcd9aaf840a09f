//! Sampler for the variance-restricted ordinal model (more than three
//! outcomes, first cut-point anchored at zero).
//!
//! Each sweep draws the coefficients and latent weights from their full
//! conditionals, moves the transformed cut-points by a random-walk
//! Metropolis-Hastings step scaled to the curvature of the log-likelihood,
//! and refreshes the latent utilities from truncated normals.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{Chain, ChainMeta, ModelKind};
use crate::dist::{sample_gig_half, sample_mvn, sample_truncnorm, spd_cholesky, QuantileSpec};
use crate::error::{Error, Result};
use crate::model::{
    gamma_from_delta, ordinal_loglik, OrdinalDataset, PriorSpec, TransformedCutpoints,
};
use crate::optim::{fd_hessian, nelder_mead_max, spd_inverse};
use crate::rng::RngState;

/// Default Metropolis-Hastings step scaling.
pub const DEFAULT_IOTA: f64 = 1.7320508075688772; // sqrt(3)

/// Chain length, burn-in, seeding and tuning knobs shared by both samplers.
#[derive(Debug, Clone)]
pub struct McmcConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    /// Leading sweeps discarded before storage.
    pub burn_in: usize,
    pub seed: u64,
    /// Proposal scaling for the cut-point step.
    pub iota: f64,
    /// Keep every `thin`-th post-burn-in draw.
    pub thin: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { iterations: 12_000, burn_in: 3_000, seed: 0, iota: DEFAULT_IOTA, thin: 1 }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::Parameter(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Parameter("thin must be at least 1".into()));
        }
        if !(self.iota > 0.0) {
            return Err(Error::Parameter(format!("iota must be positive, got {}", self.iota)));
        }
        Ok(())
    }
}

/// Mutable sampler state: coefficients, transformed cut-points, latent
/// weights and latent utilities.
#[derive(Debug, Clone)]
pub struct Or1State {
    pub beta: DVector<f64>,
    pub delta: DVector<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
}

impl Or1State {
    /// Neutral in-support start: zero coefficients, unit cut-point gaps,
    /// unit weights, utilities at their category midpoints (one unit beyond
    /// the last finite cut-point for the open-ended categories).
    pub fn init(data: &OrdinalDataset) -> Result<Self> {
        let j = data.n_categories();
        let delta = DVector::zeros(j - 2);
        let cuts = gamma_from_delta(&TransformedCutpoints { delta: delta.clone() }, j)?;
        let z = data
            .y()
            .iter()
            .map(|&label| interval_midpoint(cuts.lower(label), cuts.upper(label)))
            .collect();
        Ok(Self { beta: DVector::zeros(data.k()), delta, w: vec![1.0; data.n()], z })
    }
}

pub(crate) fn interval_midpoint(lo: f64, hi: f64) -> f64 {
    if lo == f64::NEG_INFINITY {
        hi - 1.0
    } else if hi == f64::INFINITY {
        lo + 1.0
    } else {
        0.5 * (lo + hi)
    }
}

/// Random-walk proposal for the cut-point step: `iota^2 * dhat` is the
/// covariance, with `dhat` the negative inverse Hessian of the
/// log-likelihood at its maximum.
#[derive(Debug, Clone)]
pub struct MhProposal {
    pub iota: f64,
    pub dhat: DMatrix<f64>,
    /// Lower Cholesky factor of `iota^2 * dhat`, cached for proposal draws.
    chol: DMatrix<f64>,
    /// True when the optimizer failed and the identity fallback was used.
    pub fallback: bool,
}

impl MhProposal {
    pub fn new(iota: f64, dhat: DMatrix<f64>) -> Result<Self> {
        Self::with_fallback(iota, dhat, false)
    }

    fn with_fallback(iota: f64, dhat: DMatrix<f64>, fallback: bool) -> Result<Self> {
        if !(iota > 0.0) {
            return Err(Error::Parameter(format!("iota must be positive, got {iota}")));
        }
        let chol = spd_cholesky(&(&dhat * (iota * iota)))?.l();
        Ok(Self { iota, dhat, chol, fallback })
    }
}

/// Full-conditional moments of the coefficient block: precision
/// `sum x_i x_i' / (tau^2 w_i) + B0^{-1}` and the matching mean.
pub fn beta_conditional_moments(
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    w: &[f64],
    z: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    weighted_beta_moments(data, prior, spec, w, z, 1.0)
}

/// Shared with the scale-restricted sampler, where the weight entering the
/// latent variance is `sigma * nu_i` instead of `w_i`.
pub(crate) fn weighted_beta_moments(
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    w: &[f64],
    z: &[f64],
    sigma: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = data.n();
    if w.len() != n || z.len() != n {
        return Err(Error::Domain(format!("latent vectors sized {}/{} for n = {n}", w.len(), z.len())));
    }
    let tau_sq = spec.tau_sq();
    let theta = spec.theta();
    let prior_prec = spd_cholesky(&prior.beta_cov)?.inverse();
    let mut precision = prior_prec.clone();
    let mut rhs = &prior_prec * &prior.beta_mean;
    for i in 0..n {
        if !(w[i] > 0.0) {
            return Err(Error::Domain(format!("latent weight {} at row {i} not positive", w[i])));
        }
        let denom = tau_sq * sigma * w[i];
        let xi = data.x().row(i).transpose();
        precision += &xi * xi.transpose() / denom;
        rhs += &xi * ((z[i] - theta * w[i]) / denom);
    }
    let chol = spd_cholesky(&precision)?;
    let cov = chol.inverse();
    let mean = chol.solve(&rhs);
    Ok((mean, cov))
}

/// Gibbs draw of the coefficients from their normal full conditional.
pub fn step_beta(
    state: &Or1State,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    rng: &mut RngState,
) -> Result<DVector<f64>> {
    let (mean, cov) = beta_conditional_moments(data, prior, spec, &state.w, &state.z)?;
    sample_mvn(&mean, &cov, rng)
}

/// GIG parameters of one latent-weight full conditional:
/// `lambda_i = ((z_i - x_i'beta)/tau)^2`, `eta = theta^2/tau^2 + 2`.
pub fn latent_weight_params(residual: f64, spec: &QuantileSpec) -> (f64, f64) {
    let tau_sq = spec.tau_sq();
    let lambda = residual * residual / tau_sq;
    let eta = spec.theta() * spec.theta() / tau_sq + 2.0;
    (lambda, eta)
}

/// Gibbs draw of all latent weights.
pub fn step_w(
    state: &Or1State,
    data: &OrdinalDataset,
    spec: &QuantileSpec,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    (0..data.n())
        .map(|i| {
            let resid = state.z[i] - data.xb(i, &state.beta);
            let (lambda, eta) = latent_weight_params(resid, spec);
            sample_gig_half(lambda, eta, rng)
        })
        .collect()
}

/// Tunes the Metropolis-Hastings proposal by maximizing the log-likelihood
/// jointly over coefficients and transformed cut-points, then taking the
/// cut-point block of the negative inverse Hessian at the maximizer.
///
/// Falls back to `0.01 * I` with a logged warning when the optimizer does
/// not converge (for instance when a category is empty and the likelihood
/// has no interior maximum).
pub fn compute_proposal(
    data: &OrdinalDataset,
    spec: &QuantileSpec,
    beta_init: &DVector<f64>,
    iota: f64,
) -> Result<MhProposal> {
    let k = data.k();
    let free = data.n_categories() - 2;
    let objective = |v: &DVector<f64>| -> f64 {
        let beta = DVector::from_iterator(k, v.iter().take(k).copied());
        let delta = DVector::from_iterator(free, v.iter().skip(k).copied());
        log_likelihood_at(&beta, &delta, data, spec).unwrap_or(f64::NEG_INFINITY)
    };

    let mut start = DVector::zeros(k + free);
    for i in 0..k {
        start[i] = beta_init[i];
    }
    let outcome = nelder_mead_max(&objective, &start, 0.25, 4000);

    if !outcome.converged || !outcome.value.is_finite() {
        log::warn!("proposal tuning did not converge; falling back to 0.01 * identity");
        return MhProposal::with_fallback(iota, DMatrix::identity(free, free) * 0.01, true);
    }

    let hessian = fd_hessian(&objective, &outcome.argmax);
    match spd_inverse(&(-&hessian)) {
        Ok(neg_inv) => {
            let dhat = neg_inv.view((k, k), (free, free)).into_owned();
            MhProposal::with_fallback(iota, dhat, false)
        }
        Err(e) => {
            log::warn!("curvature inversion failed ({e}); falling back to 0.01 * identity");
            MhProposal::with_fallback(iota, DMatrix::identity(free, free) * 0.01, true)
        }
    }
}

fn log_likelihood_at(
    beta: &DVector<f64>,
    delta: &DVector<f64>,
    data: &OrdinalDataset,
    spec: &QuantileSpec,
) -> Result<f64> {
    let cuts = match gamma_from_delta(&TransformedCutpoints { delta: delta.clone() }, data.n_categories()) {
        Ok(c) => c,
        Err(_) => return Ok(f64::NEG_INFINITY),
    };
    ordinal_loglik(beta, &cuts, 1.0, spec, data)
}

/// Log target of the cut-point step at fixed coefficients: the ordinal
/// log-likelihood plus the Gaussian prior kernel on the transformed
/// cut-points. Inadmissible points map to negative infinity.
pub fn delta_log_target(
    delta: &DVector<f64>,
    beta: &DVector<f64>,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
) -> Result<f64> {
    let (ll, lp) = delta_target_parts(delta, beta, data, prior, spec)?;
    Ok(if ll == f64::NEG_INFINITY { f64::NEG_INFINITY } else { ll + lp })
}

fn delta_target_parts(
    delta: &DVector<f64>,
    beta: &DVector<f64>,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
) -> Result<(f64, f64)> {
    let ll = log_likelihood_at(beta, delta, data, spec)?;
    if ll == f64::NEG_INFINITY {
        return Ok((ll, 0.0));
    }
    let centered = delta - &prior.delta_mean;
    let solved = spd_cholesky(&prior.delta_cov)?.solve(&centered);
    Ok((ll, -0.5 * centered.dot(&solved)))
}

/// Outcome of one Metropolis-Hastings update of the transformed cut-points.
#[derive(Debug, Clone)]
pub struct MhStep {
    pub delta: DVector<f64>,
    pub accepted: bool,
    /// Ordinal log-likelihood at the returned cut-points and current
    /// coefficients; reused by the deviance bookkeeping.
    pub loglik: f64,
}

/// Random-walk Metropolis-Hastings update: propose `delta + u` with
/// `u ~ N(0, iota^2 dhat)` and accept on the likelihood-times-prior ratio at
/// the current coefficients. A proposal with an impossible observation
/// (sentinel log-likelihood) is always rejected.
pub fn step_delta_mh(
    state: &Or1State,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    proposal: &MhProposal,
    rng: &mut RngState,
) -> Result<MhStep> {
    use rand::RngExt;
    use rand_distr::StandardNormal;

    let (cur_ll, cur_lp) = delta_target_parts(&state.delta, &state.beta, data, prior, spec)?;
    let u = DVector::from_fn(state.delta.len(), |_, _| rng.sample(StandardNormal));
    let proposed = &state.delta + &proposal.chol * u;
    let (prop_ll, prop_lp) = delta_target_parts(&proposed, &state.beta, data, prior, spec)?;

    let accept = if prop_ll == f64::NEG_INFINITY {
        false
    } else if cur_ll == f64::NEG_INFINITY {
        true
    } else {
        let log_ratio = (prop_ll + prop_lp) - (cur_ll + cur_lp);
        log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
    };

    Ok(if accept {
        MhStep { delta: proposed, accepted: true, loglik: prop_ll }
    } else {
        MhStep { delta: state.delta.clone(), accepted: false, loglik: cur_ll }
    })
}

/// Gibbs draw of the latent utilities from truncated normals bracketed by
/// the category interval of each observation.
pub fn step_z(
    state: &Or1State,
    data: &OrdinalDataset,
    spec: &QuantileSpec,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let cuts = gamma_from_delta(&TransformedCutpoints { delta: state.delta.clone() }, data.n_categories())?;
    let theta = spec.theta();
    let tau_sq = spec.tau_sq();
    (0..data.n())
        .map(|i| {
            let label = data.y()[i];
            let mean = data.xb(i, &state.beta) + theta * state.w[i];
            sample_truncnorm(cuts.lower(label), cuts.upper(label), mean, tau_sq * state.w[i], rng)
        })
        .collect()
}

/// Runs the full sampler: proposal tuning once, then `iterations` sweeps of
/// coefficient, weight, cut-point and utility updates. Stores post-burn-in
/// draws of the coefficients and transformed cut-points, the per-sweep
/// log-likelihood, and the Metropolis-Hastings acceptance rate.
pub fn run_or1(
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    config: &McmcConfig,
    rng: &mut RngState,
) -> Result<Chain> {
    config.validate()?;
    if data.n_categories() < 4 {
        return Err(Error::Domain(format!(
            "this sampler needs more than 3 outcome categories, got {}; use the fixed-cut-point model",
            data.n_categories()
        )));
    }
    prior.validate(data.k(), data.n_categories())?;

    let k = data.k();
    let free = data.n_categories() - 2;
    let mut state = Or1State::init(data)?;
    let proposal = compute_proposal(data, spec, &state.beta, config.iota)?;

    let kept = (config.iterations - config.burn_in).div_ceil(config.thin);
    let mut draws = DMatrix::zeros(kept, k + free);
    let mut loglik_trace = Vec::with_capacity(kept);
    let mut accepted = 0usize;
    let mut stored = 0usize;

    for sweep in 0..config.iterations {
        let at = |e: Error| Error::Numerical(format!("sweep {sweep}: {e}"));
        state.beta = step_beta(&state, data, prior, spec, rng).map_err(at)?;
        state.w = step_w(&state, data, spec, rng).map_err(at)?;
        let mh = step_delta_mh(&state, data, prior, spec, &proposal, rng).map_err(at)?;
        state.delta = mh.delta;
        state.z = step_z(&state, data, spec, rng).map_err(at)?;
        check_state_invariants(&state, data, sweep)?;

        if sweep >= config.burn_in {
            if mh.accepted {
                accepted += 1;
            }
            if (sweep - config.burn_in) % config.thin == 0 {
                for j in 0..k {
                    draws[(stored, j)] = state.beta[j];
                }
                for j in 0..free {
                    draws[(stored, k + j)] = state.delta[j];
                }
                loglik_trace.push(mh.loglik);
                stored += 1;
            }
        }
    }
    debug_assert_eq!(stored, kept);

    let mut names: Vec<String> = (1..=k).map(|i| format!("beta_{i}")).collect();
    names.extend((1..=free).map(|i| format!("delta_{i}")));
    let accept_rate = accepted as f64 / (config.iterations - config.burn_in) as f64;

    Ok(Chain {
        draws,
        names,
        loglik_trace,
        accept_rate: Some(accept_rate),
        meta: ChainMeta {
            model: ModelKind::Or1,
            p: spec.p(),
            seed: rng.seed(),
            stream: rng.stream(),
            iterations: config.iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            iota: Some(config.iota),
            proposal_fallback: Some(proposal.fallback),
            k,
            n_categories: data.n_categories(),
            fixed_cuts: None,
        },
    })
}

fn check_state_invariants(state: &Or1State, data: &OrdinalDataset, sweep: usize) -> Result<()> {
    let cuts = gamma_from_delta(
        &TransformedCutpoints { delta: state.delta.clone() },
        data.n_categories(),
    )
    .map_err(|e| Error::Numerical(format!("sweep {sweep}: {e}")))?;
    for w in cuts.interior().windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Numerical(format!("sweep {sweep}: cut-points lost their ordering")));
        }
    }
    for i in 0..data.n() {
        if !(state.w[i] > 0.0) {
            return Err(Error::Numerical(format!("sweep {sweep}: latent weight {} at row {i}", state.w[i])));
        }
        let label = data.y()[i];
        if !(state.z[i] > cuts.lower(label) && state.z[i] <= cuts.upper(label)) {
            return Err(Error::Numerical(format!(
                "sweep {sweep}: latent utility {} escaped its category interval at row {i}",
                state.z[i]
            )));
        }
    }
    Ok(())
}
