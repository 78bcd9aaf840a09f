//! Pure Gibbs sampler for the three-outcome model with both cut-points fixed
//! and a free scale parameter.
//!
//! The latent weights are reparameterized as `nu_i = sigma * w_i`, which
//! removes the scale from the conditional mean of the utilities and makes
//! every block a standard draw: normal coefficients, inverse-gamma scale,
//! GIG weights and truncated-normal utilities.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::{Chain, ChainMeta, ModelKind};
use crate::dist::{sample_gig_half, sample_invgamma, sample_mvn, sample_truncnorm, QuantileSpec};
use crate::error::{Error, Result};
use crate::model::{ordinal_loglik, CutpointVector, OrdinalDataset, PriorSpec};
use crate::or1::{interval_midpoint, weighted_beta_moments, McmcConfig};
use crate::rng::RngState;

/// Mutable sampler state: coefficients, scale, reparameterized weights and
/// latent utilities.
#[derive(Debug, Clone)]
pub struct Or2State {
    pub beta: DVector<f64>,
    pub sigma: f64,
    pub nu: Vec<f64>,
    pub z: Vec<f64>,
}

impl Or2State {
    /// Neutral start: zero coefficients, unit scale and weights, utilities at
    /// their category midpoints (one unit beyond the finite cut-points for
    /// the open-ended categories).
    pub fn init(data: &OrdinalDataset, fixed_cuts: &CutpointVector) -> Self {
        let z = data
            .y()
            .iter()
            .map(|&label| interval_midpoint(fixed_cuts.lower(label), fixed_cuts.upper(label)))
            .collect();
        Self { beta: DVector::zeros(data.k()), sigma: 1.0, nu: vec![1.0; data.n()], z }
    }
}

/// Full-conditional moments of the coefficient block; the latent variance
/// weight is `tau^2 sigma nu_i`.
pub fn beta_conditional_moments2(
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    sigma: f64,
    nu: &[f64],
    z: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("scale must be positive, got {sigma}")));
    }
    weighted_beta_moments(data, prior, spec, nu, z, sigma)
}

/// Gibbs draw of the coefficients.
pub fn step_beta2(
    state: &Or2State,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    rng: &mut RngState,
) -> Result<DVector<f64>> {
    let (mean, cov) = beta_conditional_moments2(data, prior, spec, state.sigma, &state.nu, &state.z)?;
    sample_mvn(&mean, &cov, rng)
}

/// Inverse-gamma parameters of the scale block:
/// `n_tilde = n0 + 3n` and
/// `d_tilde = sum (z_i - x_i'beta - theta nu_i)^2 / (tau^2 nu_i) + d0 + 2 sum nu_i`.
pub fn sigma_conditional_params(
    state: &Or2State,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
) -> Result<(f64, f64)> {
    let theta = spec.theta();
    let tau_sq = spec.tau_sq();
    let n_tilde = prior.sigma_shape_n0 + 3.0 * data.n() as f64;
    let mut d_tilde = prior.sigma_rate_d0;
    for i in 0..data.n() {
        if !(state.nu[i] > 0.0) {
            return Err(Error::Domain(format!("latent weight {} at row {i} not positive", state.nu[i])));
        }
        let resid = state.z[i] - data.xb(i, &state.beta) - theta * state.nu[i];
        d_tilde += resid * resid / (tau_sq * state.nu[i]) + 2.0 * state.nu[i];
    }
    if !(d_tilde > 0.0) {
        return Err(Error::Numerical(format!("inverse-gamma rate collapsed to {d_tilde}")));
    }
    Ok((n_tilde, d_tilde))
}

/// Gibbs draw of the scale from IG(n_tilde/2, d_tilde/2).
pub fn step_sigma(
    state: &Or2State,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    rng: &mut RngState,
) -> Result<f64> {
    let (n_tilde, d_tilde) = sigma_conditional_params(state, data, prior, spec)?;
    sample_invgamma(0.5 * n_tilde, 0.5 * d_tilde, rng)
}

/// GIG parameters of one reparameterized-weight conditional:
/// `lambda_i = (z_i - x_i'beta)^2 / (tau^2 sigma)`,
/// `eta = theta^2 / (tau^2 sigma) + 2 / sigma`.
pub fn latent_weight_params2(residual: f64, spec: &QuantileSpec, sigma: f64) -> (f64, f64) {
    let tau_sq = spec.tau_sq();
    let lambda = residual * residual / (tau_sq * sigma);
    let eta = spec.theta() * spec.theta() / (tau_sq * sigma) + 2.0 / sigma;
    (lambda, eta)
}

/// Gibbs draw of all reparameterized weights.
pub fn step_nu(
    state: &Or2State,
    data: &OrdinalDataset,
    spec: &QuantileSpec,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    if !(state.sigma > 0.0) {
        return Err(Error::Parameter(format!("scale must be positive, got {}", state.sigma)));
    }
    (0..data.n())
        .map(|i| {
            let resid = state.z[i] - data.xb(i, &state.beta);
            let (lambda, eta) = latent_weight_params2(resid, spec, state.sigma);
            sample_gig_half(lambda, eta, rng)
        })
        .collect()
}

/// Gibbs draw of the latent utilities from truncated normals with the fixed
/// cut-point brackets and variance `tau^2 sigma nu_i`.
pub fn step_z2(
    state: &Or2State,
    data: &OrdinalDataset,
    spec: &QuantileSpec,
    fixed_cuts: &CutpointVector,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let theta = spec.theta();
    let tau_sq = spec.tau_sq();
    (0..data.n())
        .map(|i| {
            let label = data.y()[i];
            let mean = data.xb(i, &state.beta) + theta * state.nu[i];
            sample_truncnorm(
                fixed_cuts.lower(label),
                fixed_cuts.upper(label),
                mean,
                tau_sq * state.sigma * state.nu[i],
                rng,
            )
        })
        .collect()
}

/// Runs the full Gibbs sampler and stores post-burn-in draws of the
/// coefficients and scale plus the per-sweep log-likelihood evaluated at the
/// current scale.
pub fn run_or2(
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
    fixed_cuts: &CutpointVector,
    config: &McmcConfig,
    rng: &mut RngState,
) -> Result<Chain> {
    config.validate()?;
    if data.n_categories() != 3 {
        return Err(Error::Domain(format!(
            "the fixed-cut-point model needs exactly 3 outcome categories, got {}",
            data.n_categories()
        )));
    }
    if fixed_cuts.n_categories() != 3 {
        return Err(Error::Domain("exactly two fixed interior cut-points are required".into()));
    }
    prior.validate(data.k(), data.n_categories())?;

    let k = data.k();
    let mut state = Or2State::init(data, fixed_cuts);
    let kept = (config.iterations - config.burn_in).div_ceil(config.thin);
    let mut draws = DMatrix::zeros(kept, k + 1);
    let mut loglik_trace = Vec::with_capacity(kept);
    let mut stored = 0usize;

    for sweep in 0..config.iterations {
        let at = |e: Error| Error::Numerical(format!("sweep {sweep}: {e}"));
        state.beta = step_beta2(&state, data, prior, spec, rng).map_err(at)?;
        state.sigma = step_sigma(&state, data, prior, spec, rng).map_err(at)?;
        state.nu = step_nu(&state, data, spec, rng).map_err(at)?;
        state.z = step_z2(&state, data, spec, fixed_cuts, rng).map_err(at)?;
        check_state_invariants(&state, data, fixed_cuts, sweep)?;

        if sweep >= config.burn_in && (sweep - config.burn_in) % config.thin == 0 {
            for j in 0..k {
                draws[(stored, j)] = state.beta[j];
            }
            draws[(stored, k)] = state.sigma;
            loglik_trace
                .push(ordinal_loglik(&state.beta, fixed_cuts, state.sigma, spec, data).map_err(at)?);
            stored += 1;
        }
    }
    debug_assert_eq!(stored, kept);

    let mut names: Vec<String> = (1..=k).map(|i| format!("beta_{i}")).collect();
    names.push("sigma".into());

    Ok(Chain {
        draws,
        names,
        loglik_trace,
        accept_rate: None,
        meta: ChainMeta {
            model: ModelKind::Or2,
            p: spec.p(),
            seed: rng.seed(),
            stream: rng.stream(),
            iterations: config.iterations,
            burn_in: config.burn_in,
            thin: config.thin,
            iota: None,
            proposal_fallback: None,
            k,
            n_categories: data.n_categories(),
            fixed_cuts: Some(fixed_cuts.interior().to_vec()),
        },
    })
}

fn check_state_invariants(
    state: &Or2State,
    data: &OrdinalDataset,
    cuts: &CutpointVector,
    sweep: usize,
) -> Result<()> {
    if !(state.sigma > 0.0) {
        return Err(Error::Numerical(format!("sweep {sweep}: scale {} not positive", state.sigma)));
    }
    for i in 0..data.n() {
        if !(state.nu[i] > 0.0) {
            return Err(Error::Numerical(format!("sweep {sweep}: latent weight {} at row {i}", state.nu[i])));
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdata::gen_study2;
    use approx::assert_relative_eq;

    fn spec(p: f64) -> QuantileSpec {
        QuantileSpec::new(p).unwrap()
    }

    fn cuts04() -> CutpointVector {
        CutpointVector::or2_fixed(0.0, 4.0).unwrap()
    }

    #[test]
    fn beta_moments_scale_halves_data_precision() {
        // one observation, x = 1, nu = 1: data precision 1/(tau^2 sigma)
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let data = OrdinalDataset::new(x, vec![2], 3).unwrap();
        let mut prior = PriorSpec::default_for(1, 3);
        prior.beta_cov = DMatrix::from_element(1, 1, 1e6);
        let s = spec(0.5);
        let state1 = Or2State { beta: DVector::zeros(1), sigma: 1.0, nu: vec![1.0], z: vec![2.0] };
        let state2 = Or2State { sigma: 2.0, ..state1.clone() };
        let (m1, c1) =
            beta_conditional_moments2(&data, &prior, &s, state1.sigma, &state1.nu, &state1.z).unwrap();
        let (m2, c2) =
            beta_conditional_moments2(&data, &prior, &s, state2.sigma, &state2.nu, &state2.z).unwrap();
        assert_relative_eq!(m1[0], 2.0, epsilon = 1e-4);
        assert_relative_eq!(m2[0], 2.0, epsilon = 1e-4);
        assert_relative_eq!(c2[(0, 0)] / c1[(0, 0)], 2.0, epsilon = 1e-4);
    }

    #[test]
    fn beta_recovers_exact_fit_under_flat_prior() {
        let s = spec(0.3);
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, -1.0]);
        let data = OrdinalDataset::new(x, vec![1, 2, 3], 3).unwrap();
        let mut prior = PriorSpec::default_for(1, 3);
        prior.beta_cov = DMatrix::from_element(1, 1, 1e8);
        let beta_true = 1.7;
        let nu = vec![0.5, 1.5, 2.5];
        let z: Vec<f64> =
            (0..3).map(|i| data.x()[(i, 0)] * beta_true + s.theta() * nu[i]).collect();
        let (mean, _) = beta_conditional_moments2(&data, &prior, &s, 1.3, &nu, &z).unwrap();
        assert_relative_eq!(mean[0], beta_true, epsilon = 1e-5);
    }

    #[test]
    fn sigma_params_match_closed_form() {
        let mut rng = RngState::from_seed(1);
        let data = gen_study2(300, &mut rng).unwrap();
        let state = Or2State::init(&data, &cuts04());
        let prior = PriorSpec::default_for(3, 3);
        let s = spec(0.5);
        let (n_tilde, d_tilde) = sigma_conditional_params(&state, &data, &prior, &s).unwrap();
        assert_relative_eq!(n_tilde, 905.0); // n0 + 3n = 5 + 900
        assert!(d_tilde > prior.sigma_rate_d0 + 2.0 * 300.0 - 1e-9);

        // zero residuals strip d_tilde down to d0 + 2 sum(nu)
        let zeroed = Or2State {
            z: (0..data.n()).map(|i| data.xb(i, &state.beta) + s.theta() * state.nu[i]).collect(),
            ..state
        };
        let (_, d0only) = sigma_conditional_params(&zeroed, &data, &prior, &s).unwrap();
        assert_relative_eq!(d0only, 8.0 + 2.0 * 300.0, epsilon = 1e-9);
    }

    #[test]
    fn sigma_longrun_mean_is_inverse_gamma_mean() {
        let mut rng = RngState::from_seed(2);
        let data = gen_study2(100, &mut rng).unwrap();
        let state = Or2State::init(&data, &cuts04());
        let prior = PriorSpec::default_for(3, 3);
        let s = spec(0.25);
        let (n_tilde, d_tilde) = sigma_conditional_params(&state, &data, &prior, &s).unwrap();
        let expect = (d_tilde / 2.0) / (n_tilde / 2.0 - 1.0);
        let reps = 200_000usize;
        let mut acc = 0.0;
        for _ in 0..reps {
            acc += step_sigma(&state, &data, &prior, &s, &mut rng).unwrap();
        }
        let mean = acc / reps as f64;
        assert!((mean - expect).abs() < 0.01 * expect, "mean {mean} vs {expect}");
    }

    #[test]
    fn nu_params_scale_algebra() {
        let s = spec(0.5);
        let (l1, e1) = latent_weight_params2(1.3, &s, 1.0);
        assert_relative_eq!(e1, 2.0); // theta = 0 at the median, sigma = 1
        let (l2, e2) = latent_weight_params2(1.3, &s, 2.0);
        assert_relative_eq!(l2, l1 / 2.0);
        assert_relative_eq!(e2, e1 / 2.0);
    }

    #[test]
    fn nu_moment_check() {
        let s = spec(0.75);
        let sigma = 1.7;
        let resid = 2.2;
        let (lambda, eta) = latent_weight_params2(resid, &s, sigma);
        let expect = (lambda / eta).sqrt() + 1.0 / eta;
        let x = DMatrix::from_row_slice(1, 1, &[0.0]);
        let data = OrdinalDataset::new(x, vec![2], 3).unwrap();
        let state = Or2State { beta: DVector::zeros(1), sigma, nu: vec![1.0], z: vec![resid] };
        let mut rng = RngState::from_seed(3);
        let reps = 400_000usize;
        let mut acc = 0.0;
        for _ in 0..reps {
            acc += step_nu(&state, &data, &s, &mut rng).unwrap()[0];
        }
        let mean = acc / reps as f64;
        assert!((mean - expect).abs() < 0.01 * expect, "mean {mean} vs {expect}");
    }

    #[test]
    fn z_draws_bracketed_by_fixed_cuts() {
        let mut rng = RngState::from_seed(4);
        let data = gen_study2(200, &mut rng).unwrap();
        let cuts = cuts04();
        let mut state = Or2State::init(&data, &cuts);
        state.beta = DVector::from_vec(vec![2.0, 1.5, 0.5]);
        let s = spec(0.5);
        for _ in 0..50 {
            let z = step_z2(&state, &data, &s, &cuts, &mut rng).unwrap();
            for (i, &label) in data.y().iter().enumerate() {
                match label {
                    1 => assert!(z[i] <= 0.0),
                    2 => assert!(z[i] > 0.0 && z[i] <= 4.0),
                    _ => assert!(z[i] > 4.0),
                }
            }
            state.z = z;
        }
    }

    #[test]
    fn z_untruncated_limit_mean() {
        // variance small enough that the (0, 4] bracket never binds
        let x = DMatrix::from_row_slice(1, 1, &[1.0]);
        let data = OrdinalDataset::new(x, vec![2], 3).unwrap();
        let s = spec(0.3);
        let sigma = 1e-4;
        let nu = 0.05;
        let beta = 2.0 - s.theta() * nu;
        let state = Or2State { beta: DVector::from_vec(vec![beta]), sigma, nu: vec![nu], z: vec![2.0] };
        let cuts = cuts04();
        let mut rng = RngState::from_seed(8);
        let n = 200_000usize;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += step_z2(&state, &data, &s, &cuts, &mut rng).unwrap()[0];
        }
        let mean = acc / n as f64;
        let sd = (s.tau_sq() * sigma * nu / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 4.0 * sd + 1e-5, "mean {mean}");
    }

    #[test]
    fn seed_determinism() {
        let mut rng = RngState::from_seed(5);
        let data = gen_study2(150, &mut rng).unwrap();
        let prior = PriorSpec::default_for(3, 3);
        let cfg = McmcConfig { iterations: 300, burn_in: 100, ..Default::default() };
        let cuts = cuts04();
        let s = spec(0.25);
        let a = run_or2(&data, &prior, &s, &cuts, &cfg, &mut RngState::from_seed(7)).unwrap();
        let b = run_or2(&data, &prior, &s, &cuts, &cfg, &mut RngState::from_seed(7)).unwrap();
        assert_eq!(a.draws, b.draws);
        assert_eq!(a.loglik_trace, b.loglik_trace);
    }

    #[test]
    fn rejects_wrong_category_count() {
        let mut rng = RngState::from_seed(6);
        let data = crate::simdata::gen_study1(100, &mut rng).unwrap();
        let prior = PriorSpec::default_for(3, 4);
        let cfg = McmcConfig { iterations: 10, burn_in: 1, ..Default::default() };
        assert!(run_or2(&data, &prior, &spec(0.5), &cuts04(), &cfg, &mut rng).is_err());
    }

    #[test]
    fn sigma_and_nu_stay_positive_along_chain() {
        let mut rng = RngState::from_seed(7);
        let data = gen_study2(120, &mut rng).unwrap();
        let prior = PriorSpec::default_for(3, 3);
        let cuts = cuts04();
        let s = spec(0.75);
        let mut state = Or2State::init(&data, &cuts);
        for _ in 0..200 {
            state.beta = step_beta2(&state, &data, &prior, &s, &mut rng).unwrap();
            state.sigma = step_sigma(&state, &data, &prior, &s, &mut rng).unwrap();
            state.nu = step_nu(&state, &data, &s, &mut rng).unwrap();
            state.z = step_z2(&state, &data, &s, &cuts, &mut rng).unwrap();
            assert!(state.sigma > 0.0);
            assert!(state.nu.iter().all(|&v| v > 0.0));
        }
    }
}
