use nalgebra::{DMatrix, DVector};

use super::ols::thin_qr;
use super::{log_normal_cdf, mills_ratio, DesignMatrix};
use crate::{Error, Result};

pub const PROBIT_MAX_ITER: usize = 100;
pub const PROBIT_GRADIENT_TOL: f64 = 1e-8;
const SEPARATION_BOUND: f64 = 1e3;
const MAX_HALVINGS: usize = 60;
const STEP_TOL: f64 = 1e-6;
const LL_RESOLUTION: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbitFit {
    pub coefficients: DVector<f64>,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Square roots of the diagonal of the inverse observed information.
    pub standard_errors: DVector<f64>,
    pub iterations: usize,
    /// Log-likelihood at the start and after every accepted step.
    pub trace: Vec<f64>,
}

pub fn probit_log_likelihood(x: &DMatrix<f64>, k: &[bool], beta: &DVector<f64>) -> f64 {
    let z = x * beta;
    z.iter()
        .zip(k)
        .map(|(&zi, &ki)| log_normal_cdf(if ki { zi } else { -zi }))
        .sum()
}

fn score_and_hessian(x: &DMatrix<f64>, k: &[bool], beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let p = x.ncols();
    let z = x * beta;
    let mut grad = DVector::zeros(p);
    let mut neg_hess = DMatrix::zeros(p, p);
    for (i, (&zi, &ki)) in z.iter().zip(k).enumerate() {
        let q = if ki { 1.0 } else { -1.0 };
        let lambda = q * mills_ratio(q * zi);
        let weight = lambda * (lambda + zi);
        let row = x.row(i);
        for a in 0..p {
            grad[a] += lambda * row[a];
            for b in a..p {
                neg_hess[(a, b)] += weight * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            neg_hess[(a, b)] = neg_hess[(b, a)];
        }
    }
    (grad, neg_hess)
}

/// Probit maximum likelihood by Newton's method with step halving.
///
/// Starts from zero, accepts a step only if the log-likelihood does not
/// decrease, and stops once the score norm is below
/// [`PROBIT_GRADIENT_TOL`]. Within rounding distance of the optimum, full
/// Newton steps are taken, so the trace is monotone up to that rounding. Coefficients beyond ±1e3, or running out of
/// iterations, are reported as separation.
pub fn probit_fit(design: &DesignMatrix, k: &[bool]) -> Result<ProbitFit> {
    let x = design.matrix();
    let (n, p) = x.shape();
    if k.len() != n {
        return Err(Error::Shape(format!("{} responses for {n} design rows", k.len())));
    }
    let ones = k.iter().filter(|&&v| v).count();
    if ones == 0 || ones == n {
        return Err(Error::DegenerateResponse(format!("{ones} of {n} responses are 1")));
    }
    thin_qr(x)?;

    let mut beta = DVector::zeros(p);
    let mut ll = probit_log_likelihood(x, k, &beta);
    let mut trace = vec![ll];
    for iter in 0..PROBIT_MAX_ITER {
        let (grad, neg_hess) = score_and_hessian(x, k, &beta);
        let chol = neg_hess.clone().cholesky().ok_or(Error::Separation)?;
        let step = chol.solve(&grad);
        // Under separation the score vanishes while Newton steps keep
        // growing, so both must be small.
        if grad.norm() < PROBIT_GRADIENT_TOL && step.norm() < STEP_TOL * (1.0 + beta.norm()) {
            let cov = chol.inverse();
            return Ok(ProbitFit {
                standard_errors: cov.diagonal().map(f64::sqrt),
                coefficients: beta,
                converged: true,
                log_likelihood: ll,
                iterations: iter,
                trace,
            });
        }
        // Near the optimum the predicted gain drops below the rounding level
        // of the log-likelihood and the line search can no longer tell
        // better from worse; take the plain Newton step there.
        if 0.5 * grad.dot(&step) <= LL_RESOLUTION * (1.0 + ll.abs()) {
            beta += &step;
            ll = probit_log_likelihood(x, k, &beta);
            trace.push(ll);
            continue;
        }
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &beta + &step * scale;
            let cand_ll = probit_log_likelihood(x, k, &cand);
            if cand_ll >= ll {
                beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if beta.iter().any(|b| b.abs() > SEPARATION_BOUND) {
            return Err(Error::Separation);
        }
        if !accepted {
            // No ascent left at working precision.
            if grad.norm() < 1e3 * PROBIT_GRADIENT_TOL {
                let cov = chol.inverse();
                return Ok(ProbitFit {
                    standard_errors: cov.diagonal().map(f64::sqrt),
                    converged: true,
                    coefficients: beta,
                    log_likelihood: ll,
                    iterations: iter + 1,
                    trace,
                });
            }
            return Err(Error::Separation);
        }
        trace.push(ll);
    }
    Err(Error::Separation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{normal_quantile, RngStream};

    fn intercept_only(n: usize) -> DesignMatrix {
        DesignMatrix::with_intercept(&DMatrix::zeros(n, 0))
    }

    #[test]
    fn half_ones_gives_zero_intercept() {
        let k = [true, false, true, false, true, false];
        let fit = probit_fit(&intercept_only(6), &k).unwrap();
        assert!(fit.converged);
        assert!(fit.coefficients[0].abs() < 1e-10);
    }

    #[test]
    fn three_of_four_gives_quantile() {
        let k = [true, true, true, false];
        let fit = probit_fit(&intercept_only(4), &k).unwrap();
        let expected = normal_quantile(0.75).unwrap();
        assert!((fit.coefficients[0] - expected).abs() < 1e-9);
        assert!((fit.coefficients[0] - 0.6745).abs() < 1e-4);
        assert!(fit.log_likelihood <= 0.0);
    }

    fn synthetic(n: usize, seed: u64) -> (DesignMatrix, Vec<bool>) {
        let mut s = RngStream::new(seed, 0);
        let x: Vec<f64> = (0..n).map(|_| s.standard_normal()).collect();
        let k: Vec<bool> = x
            .iter()
            .map(|&xi| 0.3 + 0.8 * xi + s.standard_normal() > 0.0)
            .collect();
        (DesignMatrix::with_intercept(&DMatrix::from_column_slice(n, 1, &x)), k)
    }

    #[test]
    fn matches_grid_search_oracle() {
        let (d, k) = synthetic(20, 11);
        let fit = probit_fit(&d, &k).unwrap();
        // Coarse grid, then two refinements around the best cell.
        let ll = |a: f64, b: f64| probit_log_likelihood(d.matrix(), &k, &DVector::from_vec(vec![a, b]));
        let (mut ca, mut cb, mut half) = (0.0, 0.0, 4.0);
        for _ in 0..4 {
            let steps = 200;
            let mut best = (f64::NEG_INFINITY, ca, cb);
            for i in 0..=steps {
                for j in 0..=steps {
                    let a = ca - half + 2.0 * half * i as f64 / steps as f64;
                    let b = cb - half + 2.0 * half * j as f64 / steps as f64;
                    let v = ll(a, b);
                    if v > best.0 {
                        best = (v, a, b);
                    }
                }
            }
            ca = best.1;
            cb = best.2;
            half /= 20.0;
        }
        assert!((fit.coefficients[0] - ca).abs() < 1e-3, "{} vs {ca}", fit.coefficients[0]);
        assert!((fit.coefficients[1] - cb).abs() < 1e-3, "{} vs {cb}", fit.coefficients[1]);
    }

    #[test]
    fn likelihood_trace_is_monotone() {
        let (d, k) = synthetic(500, 3);
        let fit = probit_fit(&d, &k).unwrap();
        assert!(fit.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs())));
        assert!(fit.converged);
    }

    #[test]
    fn large_sample_reaches_gradient_tolerance() {
        let (d, k) = synthetic(20_000, 5);
        let fit = probit_fit(&d, &k).unwrap();
        assert!(fit.converged);
        assert!((fit.coefficients[1] - 0.8).abs() < 0.05);
    }

    #[test]
    fn degenerate_responses() {
        let d = intercept_only(3);
        assert!(matches!(probit_fit(&d, &[true; 3]), Err(Error::DegenerateResponse(_))));
        assert!(matches!(probit_fit(&d, &[false; 3]), Err(Error::DegenerateResponse(_))));
    }

    #[test]
    fn perfect_separation_detected() {
        let x = DMatrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let d = DesignMatrix::with_intercept(&x);
        let k = [false, false, false, true, true, true];
        assert!(matches!(probit_fit(&d, &k), Err(Error::Separation)));
    }
}
