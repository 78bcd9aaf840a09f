//! Ordinal model ingredients: data, cut-points and their unconstrained
//! transform, priors, the ordered-outcome likelihood and the check loss.

use nalgebra::{DMatrix, DVector};

use crate::dist::{al_cdf, QuantileSpec};
use crate::error::{Error, Result};

/// Location anchor for the first interior cut-point when the cut-points are
/// estimated (the variance-restricted model).
pub const CUTPOINT_ANCHOR: f64 = 0.0;

/// Largest admissible gap log; `exp` of anything above this is treated as an
/// overflow rather than a usable cut-point spacing.
pub const MAX_DELTA: f64 = 300.0;

/// Covariates and an ordinal response with categories `1..=J`.
#[derive(Debug, Clone)]
pub struct OrdinalDataset {
    x: DMatrix<f64>,
    y: Vec<usize>,
    n_categories: usize,
}

impl OrdinalDataset {
    /// Validates shapes and labels. Every label must lie in `1..=n_categories`;
    /// a category with no observations is reported as a warning, not an error.
    pub fn new(x: DMatrix<f64>, y: Vec<usize>, n_categories: usize) -> Result<Self> {
        let n = x.nrows();
        let k = x.ncols();
        if y.len() != n {
            return Err(Error::Domain(format!("response length {} but {} rows of covariates", y.len(), n)));
        }
        if n_categories < 2 {
            return Err(Error::Domain(format!("need at least 2 categories, got {n_categories}")));
        }
        if n < k {
            return Err(Error::Domain(format!("fewer observations ({n}) than covariates ({k})")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("covariate matrix contains non-finite entries".into()));
        }
        let mut seen = vec![false; n_categories + 1];
        for (i, &label) in y.iter().enumerate() {
            if label < 1 || label > n_categories {
                return Err(Error::Domain(format!(
                    "label {label} at row {i} outside 1..={n_categories}"
                )));
            }
            seen[label] = true;
        }
        for j in 1..=n_categories {
            if !seen[j] {
                log::warn!("category {j} has no observations");
            }
        }
        Ok(Self { x, y, n_categories })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_categories(&self) -> usize {
        self.n_categories
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[usize] {
        &self.y
    }

    /// `x_i' beta` for row `i`.
    pub fn xb(&self, i: usize, beta: &DVector<f64>) -> f64 {
        self.x.row(i).iter().zip(beta.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Ordered thresholds `gamma[0] = -inf < gamma[1] < ... < gamma[J] = +inf`
/// mapping latent values to categories.
#[derive(Debug, Clone, PartialEq)]
pub struct CutpointVector {
    gamma: Vec<f64>,
}

impl CutpointVector {
    /// Builds from the interior cut-points `gamma[1..J]`; endpoints are added.
    pub fn new(interior: &[f64]) -> Result<Self> {
        if interior.is_empty() {
            return Err(Error::Domain("need at least one interior cut-point".into()));
        }
        if interior.iter().any(|g| !g.is_finite()) {
            return Err(Error::Domain("interior cut-points must be finite".into()));
        }
        for w in interior.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Domain(format!(
                    "cut-points must be strictly increasing, got {:?}",
                    interior
                )));
            }
        }
        let mut gamma = Vec::with_capacity(interior.len() + 2);
        gamma.push(f64::NEG_INFINITY);
        gamma.extend_from_slice(interior);
        gamma.push(f64::INFINITY);
        Ok(Self { gamma })
    }

    /// Two fixed interior cut-points for the three-outcome model.
    pub fn or2_fixed(g1: f64, g2: f64) -> Result<Self> {
        Self::new(&[g1, g2])
    }

    pub fn n_categories(&self) -> usize {
        self.gamma.len() - 1
    }

    /// Number of interior cut-points free under the anchored parameterization.
    pub fn free_count(&self) -> usize {
        self.n_categories().saturating_sub(2)
    }

    pub fn interior(&self) -> &[f64] {
        &self.gamma[1..self.gamma.len() - 1]
    }

    /// Lower edge of the interval for category `label` (1-based).
    pub fn lower(&self, label: usize) -> f64 {
        self.gamma[label - 1]
    }

    /// Upper edge of the interval for category `label` (1-based).
    pub fn upper(&self, label: usize) -> f64 {
        self.gamma[label]
    }
}

/// Logs of consecutive cut-point gaps; the unconstrained space the
/// Metropolis-Hastings step walks in.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCutpoints {
    pub delta: DVector<f64>,
}

/// `delta[j-2] = ln(gamma[j] - gamma[j-1])` for `j = 2..J-1`, requiring the
/// anchored first interior cut-point.
pub fn delta_from_gamma(cuts: &CutpointVector) -> Result<TransformedCutpoints> {
    let interior = cuts.interior();
    if (interior[0] - CUTPOINT_ANCHOR).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "first interior cut-point must equal the anchor {CUTPOINT_ANCHOR}, got {}",
            interior[0]
        )));
    }
    let mut delta = Vec::with_capacity(interior.len() - 1);
    for w in interior.windows(2) {
        let gap = w[1] - w[0];
        if !(gap > 0.0) {
            return Err(Error::Domain(format!("non-increasing cut-points: gap {gap}")));
        }
        delta.push(gap.ln());
    }
    Ok(TransformedCutpoints { delta: DVector::from_vec(delta) })
}

/// Inverse of [`delta_from_gamma`]: `gamma[1] = 0`, then each later interior
/// cut-point adds `exp(delta)`. Positive exponentials keep the output
/// strictly increasing; an increment too small for the floating-point grid is
/// nudged up one ulp so the ordering survives.
pub fn gamma_from_delta(delta: &TransformedCutpoints, n_categories: usize) -> Result<CutpointVector> {
    let free = n_categories.checked_sub(2).ok_or_else(|| {
        Error::Domain(format!("need at least 2 categories, got {n_categories}"))
    })?;
    if delta.delta.len() != free {
        return Err(Error::Domain(format!(
            "expected {} transformed cut-points for {} categories, got {}",
            free,
            n_categories,
            delta.delta.len()
        )));
    }
    let mut interior = Vec::with_capacity(n_categories - 1);
    interior.push(CUTPOINT_ANCHOR);
    for &d in delta.delta.iter() {
        if !d.is_finite() || d > MAX_DELTA {
            return Err(Error::Domain(format!("transformed cut-point {d} exceeds the overflow guard")));
        }
        let prev = *interior.last().unwrap();
        let mut next = prev + d.exp();
        if next <= prev {
            next = nudge_up(prev);
        }
        interior.push(next);
    }
    CutpointVector::new(&interior)
}

fn nudge_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::from_bits(1)
    } else if x > 0.0 {
        f64::from_bits(x.to_bits() + 1)
    } else {
        f64::from_bits(x.to_bits() - 1)
    }
}

/// Gaussian prior moments for the coefficients and transformed cut-points,
/// and inverse-gamma hyperparameters for the scale.
#[derive(Debug, Clone)]
pub struct PriorSpec {
    pub beta_mean: DVector<f64>,
    pub beta_cov: DMatrix<f64>,
    pub delta_mean: DVector<f64>,
    pub delta_cov: DMatrix<f64>,
    pub sigma_shape_n0: f64,
    pub sigma_rate_d0: f64,
}

impl PriorSpec {
    /// The simulation-study defaults: `beta ~ N(0, I_k)`,
    /// `delta ~ N(0, 0.25 I_{J-2})`, `sigma ~ IG(5/2, 8/2)`.
    pub fn default_for(k: usize, n_categories: usize) -> Self {
        let free = n_categories.saturating_sub(2).max(1);
        Self {
            beta_mean: DVector::zeros(k),
            beta_cov: DMatrix::identity(k, k),
            delta_mean: DVector::zeros(free),
            delta_cov: DMatrix::identity(free, free) * 0.25,
            sigma_shape_n0: 5.0,
            sigma_rate_d0: 8.0,
        }
    }

    /// Checks dimensions against the data and positive definiteness of the
    /// covariance blocks.
    pub fn validate(&self, k: usize, n_categories: usize) -> Result<()> {
        if self.beta_mean.len() != k || self.beta_cov.nrows() != k || self.beta_cov.ncols() != k {
            return Err(Error::Domain(format!(
                "beta prior dimensioned {}/{}x{}, data has k = {k}",
                self.beta_mean.len(),
                self.beta_cov.nrows(),
                self.beta_cov.ncols()
            )));
        }
        let free = n_categories.saturating_sub(2);
        if free > 0
            && (self.delta_mean.len() != free
                || self.delta_cov.nrows() != free
                || self.delta_cov.ncols() != free)
        {
            return Err(Error::Domain(format!(
                "delta prior dimensioned {} for {} free cut-points",
                self.delta_mean.len(),
                free
            )));
        }
        if !(self.sigma_shape_n0 > 0.0 && self.sigma_rate_d0 > 0.0) {
            return Err(Error::Parameter("inverse-gamma hyperparameters must be positive".into()));
        }
        crate::dist::spd_check(&self.beta_cov, "beta prior covariance")?;
        if free > 0 {
            crate::dist::spd_check(&self.delta_cov, "delta prior covariance")?;
        }
        Ok(())
    }
}

/// Log-likelihood of the ordinal model: the sum over observations of the log
/// AL-cdf difference between the two cut-points bracketing the observed
/// category. Returns negative infinity as a sentinel when any observation's
/// probability underflows to zero, so a Metropolis step can auto-reject.
pub fn ordinal_loglik(
    beta: &DVector<f64>,
    cuts: &CutpointVector,
    scale: f64,
    spec: &QuantileSpec,
    data: &OrdinalDataset,
) -> Result<f64> {
    if beta.len() != data.k() {
        return Err(Error::Domain(format!("beta length {} but k = {}", beta.len(), data.k())));
    }
    if cuts.n_categories() != data.n_categories() {
        return Err(Error::Domain(format!(
            "cut-points describe {} categories but data has {}",
            cuts.n_categories(),
            data.n_categories()
        )));
    }
    if !(scale > 0.0) {
        return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
    }
    let mut total = 0.0;
    for i in 0..data.n() {
        let xb = data.xb(i, beta);
        let label = data.y()[i];
        let pr = category_prob(xb, cuts.lower(label), cuts.upper(label), scale, spec);
        if pr <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += pr.ln();
    }
    Ok(total)
}

fn category_prob(xb: f64, lower: f64, upper: f64, scale: f64, spec: &QuantileSpec) -> f64 {
    let hi = if upper == f64::INFINITY { 1.0 } else { al_cdf(upper - xb, spec, scale) };
    let lo = if lower == f64::NEG_INFINITY { 0.0 } else { al_cdf(lower - xb, spec, scale) };
    hi - lo
}

/// Probabilities of each category for one covariate row; nonnegative and
/// summing to one.
pub fn outcome_probs(
    x: &DVector<f64>,
    beta: &DVector<f64>,
    cuts: &CutpointVector,
    scale: f64,
    spec: &QuantileSpec,
) -> Result<Vec<f64>> {
    if x.len() != beta.len() {
        return Err(Error::Domain(format!("x length {} but beta length {}", x.len(), beta.len())));
    }
    if !(scale > 0.0) {
        return Err(Error::Parameter(format!("scale must be positive, got {scale}")));
    }
    let xb = x.dot(beta);
    let j = cuts.n_categories();
    let mut probs = Vec::with_capacity(j);
    for label in 1..=j {
        let pr = category_prob(xb, cuts.lower(label), cuts.upper(label), scale, spec);
        probs.push(pr.max(0.0));
    }
    Ok(probs)
}

/// The check loss `u (p - 1{u < 0})`: nonnegative, zero only at the origin.
pub fn check_loss(u: f64, p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    if u >= 0.0 {
        u * p
    } else {
        u * (p - 1.0)
    }
}
