//! Shared oracles for the integration suites: complete-data posterior
//! kernels evaluated directly from their definitions, a ratio-of-uniforms
//! GIG sampler, and a Kolmogorov-Smirnov distance.
//!
//! Everything here is deliberately independent of the sampler internals it
//! is used to check: kernels are transcribed term by term from the joint
//! posterior densities, not reusing the library's conditional-moment code.

#![allow(dead_code)]

use nalgebra::DVector;
use ordqr::model::{gamma_from_delta, CutpointVector, OrdinalDataset, PriorSpec, TransformedCutpoints};
use ordqr::{QuantileSpec, RngState};
use rand::RngExt;

/// Log of the unnormalized complete-data posterior for the variance-fixed
/// model: bracket indicators, normal latent densities, unit-exponential
/// weights, and Gaussian priors on the coefficients and transformed
/// cut-points.
pub fn or1_complete_log_kernel(
    z: &[f64],
    beta: &DVector<f64>,
    delta: &DVector<f64>,
    w: &[f64],
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
) -> f64 {
    let cuts = match gamma_from_delta(&TransformedCutpoints { delta: delta.clone() }, data.n_categories()) {
        Ok(c) => c,
        Err(_) => return f64::NEG_INFINITY,
    };
    let theta = spec.theta();
    let tau_sq = spec.tau_sq();
    let mut total = 0.0;
    for i in 0..data.n() {
        let label = data.y()[i];
        if !(z[i] > cuts.lower(label) && z[i] <= cuts.upper(label)) {
            return f64::NEG_INFINITY;
        }
        if !(w[i] > 0.0) {
            return f64::NEG_INFINITY;
        }
        let mean = data.xb(i, beta) + theta * w[i];
        total += ln_normal(z[i], mean, tau_sq * w[i]);
        total += -w[i]; // exponential(1) prior on the weight
    }
    total += ln_mvn_kernel(beta, &prior.beta_mean, &prior.beta_cov);
    total += ln_mvn_kernel(delta, &prior.delta_mean, &prior.delta_cov);
    total
}

/// Log of the unnormalized complete-data posterior for the fixed-cut-point
/// model with free scale.
pub fn or2_complete_log_kernel(
    z: &[f64],
    beta: &DVector<f64>,
    sigma: f64,
    nu: &[f64],
    cuts: &CutpointVector,
    data: &OrdinalDataset,
    prior: &PriorSpec,
    spec: &QuantileSpec,
) -> f64 {
    if !(sigma > 0.0) {
        return f64::NEG_INFINITY;
    }
    let theta = spec.theta();
    let tau_sq = spec.tau_sq();
    let mut total = 0.0;
    for i in 0..data.n() {
        let label = data.y()[i];
        if !(z[i] > cuts.lower(label) && z[i] <= cuts.upper(label)) {
            return f64::NEG_INFINITY;
        }
        if !(nu[i] > 0.0) {
            return f64::NEG_INFINITY;
        }
        let mean = data.xb(i, beta) + theta * nu[i];
        total += ln_normal(z[i], mean, tau_sq * sigma * nu[i]);
        total += -sigma.ln() - nu[i] / sigma; // exponential(sigma) prior on nu
    }
    total += ln_mvn_kernel(beta, &prior.beta_mean, &prior.beta_cov);
    // inverse-gamma(n0/2, d0/2) prior kernel on sigma
    total += -(prior.sigma_shape_n0 / 2.0 + 1.0) * sigma.ln() - prior.sigma_rate_d0 / (2.0 * sigma);
    total
}

pub fn ln_normal(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

/// Gaussian log-kernel `-(x-m)' C^{-1} (x-m) / 2`; the normalizing constant
/// cancels in every ratio these tests take.
pub fn ln_mvn_kernel(x: &DVector<f64>, mean: &DVector<f64>, cov: &nalgebra::DMatrix<f64>) -> f64 {
    let centered = x - mean;
    let solved = nalgebra::Cholesky::new(cov.clone()).expect("SPD covariance").solve(&centered);
    -0.5 * centered.dot(&solved)
}

/// GIG(1/2) log-kernel.
pub fn ln_gig_half_kernel(x: f64, lambda: f64, eta: f64) -> f64 {
    -0.5 * x.ln() - 0.5 * (lambda / x + eta * x)
}

/// Inverse-gamma log-kernel with shape `a`, rate `b`.
pub fn ln_invgamma_kernel(x: f64, a: f64, b: f64) -> f64 {
    -(a + 1.0) * x.ln() - b / x
}

/// Ratio-of-uniforms sampler for GIG(1/2, lambda, eta), used as a slow
/// independent check of the inverse-Gaussian route. The bounding-box edges
/// come from the closed-form maximizers of `h` and `x^2 h`.
pub fn rou_gig_half(lambda: f64, eta: f64, count: usize, rng: &mut RngState) -> Vec<f64> {
    assert!(lambda > 0.0 && eta > 0.0);
    let h = |x: f64| -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            (-0.5 * (lambda / x + eta * x)).exp() / x.sqrt()
        }
    };
    // stationary points of h and x^2 h: eta x^2 + x - lambda = 0 and
    // eta x^2 - 3x - lambda = 0
    let x_mode = (-1.0 + (1.0 + 4.0 * eta * lambda).sqrt()) / (2.0 * eta);
    let x_mode2 = (3.0 + (9.0 + 4.0 * eta * lambda).sqrt()) / (2.0 * eta);
    let u_max = h(x_mode).sqrt();
    let v_max = (x_mode2 * x_mode2 * h(x_mode2)).sqrt();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0.0..u_max);
        let v = rng.random_range(0.0..v_max);
        if u <= 0.0 {
            continue;
        }
        let x = v / u;
        if u * u <= h(x) {
            out.push(x);
        }
    }
    out
}

/// One-sample Kolmogorov-Smirnov statistic against `cdf`.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((((i + 1) as f64) / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len(), b.len());
    let mut d = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na && j < nb {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    d
}
