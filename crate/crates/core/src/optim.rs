//! Derivative-free maximization and curvature estimation for proposal tuning.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) struct MaximizeOutcome {
    pub argmax: DVector<f64>,
    pub value: f64,
    pub converged: bool,
}

/// Nelder-Mead maximization of `f`. Returns the best point found and whether
/// the simplex collapsed below tolerance before the evaluation budget ran out.
pub(crate) fn nelder_mead_max(
    f: &dyn Fn(&DVector<f64>) -> f64,
    start: &DVector<f64>,
    step: f64,
    max_iter: usize,
) -> MaximizeOutcome {
    let dim = start.len();
    let neg = |x: &DVector<f64>| -f(x);

    let mut simplex: Vec<DVector<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.clone());
    for i in 0..dim {
        let mut v = start.clone();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| neg(v)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let tol = 1e-12;
    let mut converged = false;

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<_> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<_> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let spread = (values[dim] - values[0]).abs();
        let width = (0..dim)
            .map(|i| (&simplex[dim] - &simplex[0])[i].abs())
            .fold(0.0f64, f64::max);
        if spread < tol && width < tol {
            converged = true;
            break;
        }

        let centroid: DVector<f64> =
            simplex[..dim].iter().fold(DVector::zeros(dim), |acc, v| acc + v) / dim as f64;

        let reflected = &centroid + (&centroid - &simplex[dim]) * alpha;
        let fr = neg(&reflected);
        if fr < values[0] {
            let expanded = &centroid + (&reflected - &centroid) * gamma;
            let fe = neg(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
        } else {
            let contracted = if fr < values[dim] {
                &centroid + (&reflected - &centroid) * rho
            } else {
                &centroid + (&simplex[dim] - &centroid) * rho
            };
            let fc = neg(&contracted);
            if fc < values[dim].min(fr) {
                simplex[dim] = contracted;
                values[dim] = fc;
            } else {
                for i in 1..=dim {
                    simplex[i] = &simplex[0] + (&simplex[i] - &simplex[0]) * sigma;
                    values[i] = neg(&simplex[i]);
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    MaximizeOutcome {
        argmax: simplex[best].clone(),
        value: -values[best],
        converged: converged && values[best].is_finite(),
    }
}

/// Central finite-difference Hessian with per-coordinate step
/// `h_j = 1e-4 * max(1, |x_j|)`.
pub(crate) fn fd_hessian(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DMatrix<f64> {
    let dim = x.len();
    let h: Vec<f64> = x.iter().map(|v| 1e-4 * v.abs().max(1.0)).collect();
    let mut hess = DMatrix::zeros(dim, dim);
    let f0 = f(x);
    for a in 0..dim {
        // diagonal: (f(x+h) - 2 f(x) + f(x-h)) / h^2
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[a] += h[a];
        xm[a] -= h[a];
        hess[(a, a)] = (f(&xp) - 2.0 * f0 + f(&xm)) / (h[a] * h[a]);
        for b in (a + 1)..dim {
            let mut xpp = x.clone();
            let mut xpm = x.clone();
            let mut xmp = x.clone();
            let mut xmm = x.clone();
            xpp[a] += h[a];
            xpp[b] += h[b];
            xpm[a] += h[a];
            xpm[b] -= h[b];
            xmp[a] -= h[a];
            xmp[b] += h[b];
            xmm[a] -= h[a];
            xmm[b] -= h[b];
            let v = (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h[a] * h[b]);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    hess
}

/// Inverse of a symmetric matrix with eigenvalues clamped positive, so the
/// result is always symmetric positive definite.
pub(crate) fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if !max_abs.is_finite() {
        return Err(Error::Numerical("non-finite eigenvalues in curvature matrix".into()));
    }
    let floor = (max_abs * 1e-10).max(1e-12);
    let inv_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&v| 1.0 / v.max(floor)),
    );
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&inv_vals) * v.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn maximizes_concave_quadratic() {
        let f = |x: &DVector<f64>| {
            -(x[0] - 1.5).powi(2) - 2.0 * (x[1] + 0.5).powi(2) - 0.5 * (x[0] - 1.5) * (x[1] + 0.5)
        };
        let out = nelder_mead_max(&f, &DVector::zeros(2), 0.25, 5000);
        assert!(out.converged);
        assert_relative_eq!(out.argmax[0], 1.5, epsilon = 1e-5);
        assert_relative_eq!(out.argmax[1], -0.5, epsilon = 1e-5);
        assert!(out.value.abs() < 1e-9);
    }

    #[test]
    fn hessian_of_quadratic() {
        let f = |x: &DVector<f64>| -(2.0 * x[0] * x[0] + 3.0 * x[1] * x[1] + x[0] * x[1]);
        let h = fd_hessian(&f, &DVector::from_vec(vec![0.3, -0.7]));
        assert_relative_eq!(h[(0, 0)], -4.0, epsilon = 1e-4);
        assert_relative_eq!(h[(1, 1)], -6.0, epsilon = 1e-4);
        assert_relative_eq!(h[(0, 1)], -1.0, epsilon = 1e-4);
    }

    #[test]
    fn spd_inverse_clamps_indefinite_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let inv = spd_inverse(&m).unwrap();
        // result must be positive definite even though the input was not
        assert!(nalgebra::Cholesky::new(inv.clone()).is_some());
        assert_relative_eq!(inv[(0, 0)], 1.0, epsilon = 1e-9);
    }
}
