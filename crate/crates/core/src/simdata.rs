//! Synthetic ordinal datasets used by the test and acceptance harnesses.

use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::OrdinalDataset;
use crate::rng::RngState;

/// Error-mixture component families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Logistic,
    Gaussian,
}

/// One mixture component, parameterized by location and variance. For the
/// logistic family the variance fixes the scale via `s = sqrt(3 V) / pi`.
#[derive(Debug, Clone, Copy)]
pub struct MixtureComponent {
    pub family: ErrorFamily,
    pub location: f64,
    pub variance: f64,
    pub weight: f64,
}

/// How the covariate rows are drawn.
#[derive(Debug, Clone, Copy)]
pub enum CovariateLaw {
    /// A leading column of ones plus `k - 1` independent standard uniforms.
    InterceptStdUniform { k: usize },
    /// A leading column of ones plus two standard normals with the given
    /// correlation.
    InterceptBivariateNormal { correlation: f64 },
}

impl CovariateLaw {
    pub fn k(&self) -> usize {
        match self {
            CovariateLaw::InterceptStdUniform { k } => *k,
            CovariateLaw::InterceptBivariateNormal { .. } => 3,
        }
    }
}

/// A complete simulation design: sample size, coefficients, error mixture,
/// cut-points and covariate law.
#[derive(Debug, Clone)]
pub struct SimRecipe {
    pub n: usize,
    pub beta_true: Vec<f64>,
    pub error_mixture: Vec<MixtureComponent>,
    pub gamma_true: Vec<f64>,
    pub covariates: CovariateLaw,
}

impl SimRecipe {
    fn validate(&self) -> Result<()> {
        let wsum: f64 = self.error_mixture.iter().map(|c| c.weight).sum();
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!("mixture weights sum to {wsum}, not 1")));
        }
        if self.error_mixture.iter().any(|c| !(c.variance > 0.0)) {
            return Err(Error::Parameter("mixture variances must be positive".into()));
        }
        for w in self.gamma_true.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Parameter("true cut-points must be increasing".into()));
            }
        }
        if self.beta_true.len() != self.covariates.k() {
            return Err(Error::Parameter(format!(
                "{} coefficients for {} covariates",
                self.beta_true.len(),
                self.covariates.k()
            )));
        }
        Ok(())
    }
}

/// First study design: n observations, coefficients `(-2, 3, 4)` on an
/// intercept and two standard uniforms, errors from the logistic mixture
/// `0.3 L(-5, pi^2/3) + 0.7 L(2, pi^2/3)` (unimodal, negatively skewed
/// latent variable), discretized at `(0, 2, 3)` into four categories.
pub fn study1_recipe(n: usize) -> SimRecipe {
    let pi_sq_3 = std::f64::consts::PI * std::f64::consts::PI / 3.0;
    SimRecipe {
        n,
        beta_true: vec![-2.0, 3.0, 4.0],
        error_mixture: vec![
            MixtureComponent { family: ErrorFamily::Logistic, location: -5.0, variance: pi_sq_3, weight: 0.3 },
            MixtureComponent { family: ErrorFamily::Logistic, location: 2.0, variance: pi_sq_3, weight: 0.7 },
        ],
        gamma_true: vec![0.0, 2.0, 3.0],
        covariates: CovariateLaw::InterceptStdUniform { k: 3 },
    }
}

/// Second study design: coefficients `(2, 2, 1)` on an intercept and two
/// standard normals with correlation 0.25, errors from the Gaussian mixture
/// `0.3 N(-6, 4) + 0.7 N(5, 1)` (bimodal, negatively skewed latent
/// variable), discretized at `(0, 4)` into three categories.
pub fn study2_recipe(n: usize) -> SimRecipe {
    SimRecipe {
        n,
        beta_true: vec![2.0, 2.0, 1.0],
        error_mixture: vec![
            MixtureComponent { family: ErrorFamily::Gaussian, location: -6.0, variance: 4.0, weight: 0.3 },
            MixtureComponent { family: ErrorFamily::Gaussian, location: 5.0, variance: 1.0, weight: 0.7 },
        ],
        gamma_true: vec![0.0, 4.0],
        covariates: CovariateLaw::InterceptBivariateNormal { correlation: 0.25 },
    }
}

/// Draws a dataset from a recipe: covariates, latent `z = x'beta + eps`,
/// and the discretized response.
pub fn generate(recipe: &SimRecipe, rng: &mut RngState) -> Result<OrdinalDataset> {
    recipe.validate()?;
    let n = recipe.n;
    let x = draw_covariates(&recipe.covariates, n, rng);
    let beta = DVector::from_vec(recipe.beta_true.clone());
    let n_categories = recipe.gamma_true.len() + 1;

    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let xb: f64 = x.row(i).iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
        let z = xb + draw_mixture(&recipe.error_mixture, rng);
        let label = 1 + recipe.gamma_true.iter().filter(|&&g| z > g).count();
        y.push(label);
    }
    OrdinalDataset::new(x, y, n_categories)
}

/// First study dataset at the given size.
pub fn gen_study1(n: usize, rng: &mut RngState) -> Result<OrdinalDataset> {
    generate(&study1_recipe(n), rng)
}

/// Second study dataset at the given size.
pub fn gen_study2(n: usize, rng: &mut RngState) -> Result<OrdinalDataset> {
    generate(&study2_recipe(n), rng)
}

fn draw_covariates(law: &CovariateLaw, n: usize, rng: &mut RngState) -> DMatrix<f64> {
    match law {
        CovariateLaw::InterceptStdUniform { k } => DMatrix::from_fn(n, *k, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.random_range(0.0..1.0)
            }
        }),
        CovariateLaw::InterceptBivariateNormal { correlation } => {
            let rho = *correlation;
            let load = (1.0 - rho * rho).sqrt();
            let mut x = DMatrix::zeros(n, 3);
            for i in 0..n {
                let u1: f64 = StandardNormal.sample(rng);
                let u2: f64 = StandardNormal.sample(rng);
                x[(i, 0)] = 1.0;
                x[(i, 1)] = u1;
                x[(i, 2)] = rho * u1 + load * u2;
            }
            x
        }
    }
}

fn draw_mixture(components: &[MixtureComponent], rng: &mut RngState) -> f64 {
    let mut pick: f64 = rng.random();
    let mut chosen = components[components.len() - 1];
    for c in components {
        if pick < c.weight {
            chosen = *c;
            break;
        }
        pick -= c.weight;
    }
    match chosen.family {
        ErrorFamily::Gaussian => {
            let e: f64 = StandardNormal.sample(rng);
            chosen.location + chosen.variance.sqrt() * e
        }
        ErrorFamily::Logistic => {
            // variance s^2 pi^2 / 3 pins the scale
            let s = (3.0 * chosen.variance).sqrt() / std::f64::consts::PI;
            let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            chosen.location + s * (u / (1.0 - u)).ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study1_counts_near_reference() {
        // reference counts (107, 43, 36, 114) at n = 300, each within +/-35
        let reference = [107.0, 43.0, 36.0, 114.0];
        for seed in [1u64, 2, 3] {
            let mut rng = RngState::from_seed(seed);
            let data = gen_study1(300, &mut rng).unwrap();
            assert_eq!(data.n_categories(), 4);
            let mut counts = [0usize; 4];
            for &label in data.y() {
                counts[label - 1] += 1;
            }
            for (c, r) in counts.iter().zip(reference.iter()) {
                assert!((*c as f64 - r).abs() <= 35.0, "seed {seed}: counts {counts:?}");
            }
        }
    }

    #[test]
    fn study1_labels_in_range_and_latent_negatively_skewed() {
        let mut rng = RngState::from_seed(4);
        let data = gen_study1(300, &mut rng).unwrap();
        assert!(data.y().iter().all(|&l| (1..=4).contains(&l)));

        // reconstruct latent skewness from a big fresh draw of the recipe
        let recipe = study1_recipe(20_000);
        let mut rng = RngState::from_seed(5);
        let x = draw_covariates(&recipe.covariates, recipe.n, &mut rng);
        let beta = DVector::from_vec(recipe.beta_true.clone());
        let z: Vec<f64> = (0..recipe.n)
            .map(|i| {
                let xb: f64 = x.row(i).iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
                xb + draw_mixture(&recipe.error_mixture, &mut rng)
            })
            .collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let m2 = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        let m3 = z.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / z.len() as f64;
        let skew = m3 / m2.powf(1.5);
        assert!(skew < -0.1, "skewness {skew}");
    }

    #[test]
    fn study2_counts_correlation_and_bimodality() {
        let reference = [77.0, 38.0, 185.0];
        for seed in [1u64, 2, 3] {
            let mut rng = RngState::from_seed(seed);
            let data = gen_study2(300, &mut rng).unwrap();
            assert_eq!(data.n_categories(), 3);
            let mut counts = [0usize; 3];
            for &label in data.y() {
                counts[label - 1] += 1;
            }
            for (c, r) in counts.iter().zip(reference.iter()) {
                assert!((*c as f64 - r).abs() <= 35.0, "seed {seed}: counts {counts:?}");
            }

            // empirical correlation of the two non-intercept covariates
            let x = data.x();
            let n = data.n() as f64;
            let (mut s1, mut s2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..data.n() {
                let a = x[(i, 1)];
                let b = x[(i, 2)];
                s1 += a;
                s2 += b;
                s11 += a * a;
                s22 += b * b;
                s12 += a * b;
            }
            let cov = s12 / n - (s1 / n) * (s2 / n);
            let corr = cov / ((s11 / n - (s1 / n).powi(2)).sqrt() * (s22 / n - (s2 / n).powi(2)).sqrt());
            assert!((corr - 0.25).abs() < 0.1, "seed {seed}: corr {corr}");
        }

        // two-means separation heuristic on the latent variable
        let recipe = study2_recipe(20_000);
        let mut rng = RngState::from_seed(11);
        let x = draw_covariates(&recipe.covariates, recipe.n, &mut rng);
        let beta = DVector::from_vec(recipe.beta_true.clone());
        let z: Vec<f64> = (0..recipe.n)
            .map(|i| {
                let xb: f64 = x.row(i).iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
                xb + draw_mixture(&recipe.error_mixture, &mut rng)
            })
            .collect();
        let (m1, m2, s1, s2) = two_means(&z);
        assert!(
            (m1 - m2).abs() > 1.5 * (s1 + s2),
            "modes {m1}/{m2} with spreads {s1}/{s2} not separated"
        );
    }

    /// One-dimensional 2-means with a mean split start; returns cluster
    /// means and standard deviations.
    fn two_means(z: &[f64]) -> (f64, f64, f64, f64) {
        let mut c1 = z.iter().copied().fold(f64::INFINITY, f64::min);
        let mut c2 = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..100 {
            let (mut a, mut na, mut b, mut nb) = (0.0, 0usize, 0.0, 0usize);
            for &v in z {
                if (v - c1).abs() <= (v - c2).abs() {
                    a += v;
                    na += 1;
                } else {
                    b += v;
                    nb += 1;
                }
            }
            let n1 = a / na.max(1) as f64;
            let n2 = b / nb.max(1) as f64;
            if (n1 - c1).abs() + (n2 - c2).abs() < 1e-10 {
                break;
            }
            c1 = n1;
            c2 = n2;
        }
        let (mut v1, mut n1, mut v2, mut n2) = (0.0, 0usize, 0.0, 0usize);
        for &v in z {
            if (v - c1).abs() <= (v - c2).abs() {
                v1 += (v - c1) * (v - c1);
                n1 += 1;
            } else {
                v2 += (v - c2) * (v - c2);
                n2 += 1;
            }
        }
        (c1, c2, (v1 / n1.max(1) as f64).sqrt(), (v2 / n2.max(1) as f64).sqrt())
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let a = gen_study1(100, &mut RngState::from_seed(9)).unwrap();
        let b = gen_study1(100, &mut RngState::from_seed(9)).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        let c = gen_study1(100, &mut RngState::from_seed(10)).unwrap();
        assert_eq!(c.n_categories(), 4);
        assert_eq!(c.k(), 3);
        assert_ne!(a.y(), c.y());
    }

    #[test]
    fn bad_recipes_rejected() {
        let mut r = study1_recipe(100);
        r.error_mixture[0].weight = 0.5;
        assert!(generate(&r, &mut RngState::from_seed(1)).is_err());
        let mut r = study1_recipe(100);
        r.gamma_true = vec![1.0, 0.5];
        assert!(generate(&r, &mut RngState::from_seed(1)).is_err());
    }
}
