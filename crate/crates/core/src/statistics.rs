//! Test statistics `T(Y, W, X)`.
//!
//! [`TPosLinear`] is the negative log posterior density of the treatment
//! coefficient at zero in the normal linear model `Y = a + W b + X d + ε`,
//! with the additive constant dropped:
//!
//! ```text
//! T = ln se(b̂) + (ν/2) ln(1 + b̂² / (ν se(b̂)²)),   ν = n − k − 1
//! ```
//!
//! where `k = d + 1` counts the non-intercept regressors including the
//! treatment. [`ConjugateBayesFactor`] and [`ConjugatePosterior`] are the
//! Bayes factor and the posterior-density statistic of the known-variance
//! toy family `Y ~ N(bW, I)`, `b ~ N(0, τ²)`, which order assignments
//! identically.

use nalgebra::{DMatrix, DVector};

use crate::stats::{ols_fit, DesignMatrix};
use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A real-valued statistic of outcomes, treatment and covariates.
pub trait TestStatistic: Send + Sync {
    fn name(&self) -> &str;

    fn evaluate(&self, y: &[f64], w: &[f64], x: &DMatrix<f64>) -> Result<f64>;

    /// Fixes `y` and `x` so that repeated evaluation over treatment
    /// vectors can reuse work. The default simply forwards to `evaluate`.
    fn bind<'a>(&'a self, y: &'a [f64], x: &'a DMatrix<f64>) -> Result<Box<dyn BoundStatistic + 'a>> {
        Ok(Box::new(Forward { stat: self, y, x }))
    }
}

/// A statistic with outcomes and covariates fixed.
pub trait BoundStatistic: Send + Sync {
    fn eval(&self, w: &[f64]) -> Result<f64>;
}

struct Forward<'a, S: ?Sized> {
    stat: &'a S,
    y: &'a [f64],
    x: &'a DMatrix<f64>,
}

impl<S: TestStatistic + ?Sized> BoundStatistic for Forward<'_, S> {
    fn eval(&self, w: &[f64]) -> Result<f64> {
        self.stat.evaluate(self.y, w, self.x)
    }
}

/// Parametric family and prior partition behind a Bayes-factor statistic.
///
/// Only the conjugate toy family is simulated: `Y_i ~ N(b W_i, 1)` with
/// `Θ₀ = {0}` and `b ~ N(0, prior_variance)` on `Θ₁ = ℝ \ {0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BayesSpec {
    pub prior_variance: f64,
    /// Prior probability of the alternative, `Pr(H₁)`.
    pub prob_alternative: f64,
}

impl Default for BayesSpec {
    fn default() -> Self {
        Self {
            prior_variance: 1.0,
            prob_alternative: 0.5,
        }
    }
}

fn check_len(y: &[f64], w: &[f64]) -> Result<()> {
    if y.len() != w.len() {
        return Err(Error::Shape(format!("{} outcomes, {} treatments", y.len(), w.len())));
    }
    Ok(())
}

fn t_pos_from(b: f64, se: f64, dof: usize) -> Result<f64> {
    if !(se > 0.0) || !se.is_finite() {
        return Err(Error::Singular);
    }
    let nu = dof as f64;
    Ok(se.ln() + 0.5 * nu * (b * b / (nu * se * se)).ln_1p())
}

/// Posterior-density statistic of the normal linear model, computed from a
/// full OLS fit of `y` on `[1, w, x]`.
pub fn t_pos_linear(y: &[f64], w: &[f64], x: &DMatrix<f64>) -> Result<f64> {
    check_len(y, w)?;
    if y.len() <= x.ncols() + 2 {
        return Err(Error::InsufficientData(format!("{} units for {} covariates", y.len(), x.ncols())));
    }
    let fit = ols_fit(&DesignMatrix::with_intercept_and(w, x), y)?;
    t_pos_from(fit.coefficients[1], fit.coef_standard_errors[1], fit.dof)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TPosLinear;

impl TestStatistic for TPosLinear {
    fn name(&self) -> &str {
        "t_pos_linear"
    }

    fn evaluate(&self, y: &[f64], w: &[f64], x: &DMatrix<f64>) -> Result<f64> {
        t_pos_linear(y, w, x)
    }

    fn bind<'a>(&'a self, y: &'a [f64], x: &'a DMatrix<f64>) -> Result<Box<dyn BoundStatistic + 'a>> {
        Ok(Box::new(PartialledTPos::new(y, x)?))
    }
}

/// [`t_pos_linear`] by partialling out `[1, x]` once (Frisch-Waugh-Lovell).
///
/// With `Q` an orthonormal basis of `[1, x]`, `ỹ = (I − QQᵀ) y` is fixed and
/// each evaluation only needs `w̃ = (I − QQᵀ) w`:
/// `b̂ = w̃ᵀỹ / w̃ᵀw̃`, `RSS = ỹᵀỹ − b̂ w̃ᵀỹ`, `se² = RSS / (ν w̃ᵀw̃)`.
pub struct PartialledTPos {
    q: DMatrix<f64>,
    y_resid: DVector<f64>,
    y_rss: f64,
    dof: usize,
    col_scale: f64,
}

/// Relative size of the partialled treatment below which `w` is taken to
/// lie in the span of `[1, x]`.
const COLLINEAR_TOL: f64 = 1e-10;

impl PartialledTPos {
    pub fn new(y: &[f64], x: &DMatrix<f64>) -> Result<Self> {
        let n = y.len();
        if x.nrows() != n {
            return Err(Error::Shape(format!("{n} outcomes, {} covariate rows", x.nrows())));
        }
        if n <= x.ncols() + 2 {
            return Err(Error::InsufficientData(format!("{n} units for {} covariates", x.ncols())));
        }
        let design = DesignMatrix::with_intercept(x);
        let (q, r) = crate::stats::ols_thin_qr(design.matrix())?;
        let y = DVector::from_column_slice(y);
        let y_resid = &y - &q * (q.transpose() * &y);
        let col_scale = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        Ok(Self {
            y_rss: y_resid.norm_squared(),
            dof: n - x.ncols() - 2,
            q,
            y_resid,
            col_scale,
        })
    }
}

impl BoundStatistic for PartialledTPos {
    fn eval(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.y_resid.len() {
            return Err(Error::Shape(format!("{} treatments for {} units", w.len(), self.y_resid.len())));
        }
        let w = DVector::from_column_slice(w);
        let w_resid = &w - &self.q * (self.q.tr_mul(&w));
        let s_ww = w_resid.norm_squared();
        if s_ww.sqrt() <= COLLINEAR_TOL * w.norm().max(self.col_scale) {
            return Err(Error::Singular);
        }
        let s_wy = w_resid.dot(&self.y_resid);
        let b = s_wy / s_ww;
        let rss = (self.y_rss - b * s_wy).max(0.0);
        let se = (rss / self.dof as f64 / s_ww).sqrt();
        t_pos_from(b, se, self.dof)
    }
}

fn conjugate_moments(y: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    check_len(y, w)?;
    let sww = w.iter().map(|v| v * v).sum();
    let swy = w.iter().zip(y).map(|(a, b)| a * b).sum();
    Ok((sww, swy))
}

/// Bayes factor of `b ~ N(0, 1)` against `b = 0` for `y ~ N(b w, I)`.
pub fn t_bf_conjugate(y: &[f64], w: &[f64]) -> Result<f64> {
    ConjugateBayesFactor::default().bayes_factor(y, w)
}

#[derive(Clone, Copy, Debug)]
pub struct ConjugateBayesFactor {
    pub prior_variance: f64,
}

impl Default for ConjugateBayesFactor {
    fn default() -> Self {
        Self { prior_variance: 1.0 }
    }
}

impl ConjugateBayesFactor {
    /// `∫N(y; bw, I)N(b; 0, τ²)db / N(y; 0, I) = (1 + τ²S)^(−1/2) exp(τ²C² / (2(1 + τ²S)))`
    /// with `S = Σw²`, `C = Σwy`.
    pub fn bayes_factor(&self, y: &[f64], w: &[f64]) -> Result<f64> {
        let (sww, swy) = conjugate_moments(y, w)?;
        let t2 = self.prior_variance;
        let d = 1.0 + t2 * sww;
        Ok(d.powf(-0.5) * (t2 * swy * swy / (2.0 * d)).exp())
    }
}

impl TestStatistic for ConjugateBayesFactor {
    fn name(&self) -> &str {
        "t_bf_conjugate"
    }

    fn evaluate(&self, y: &[f64], w: &[f64], _x: &DMatrix<f64>) -> Result<f64> {
        self.bayes_factor(y, w)
    }
}

/// `−ln f(b = 0 | y, w)` in the conjugate toy family.
#[derive(Clone, Copy, Debug)]
pub struct ConjugatePosterior {
    pub prior_variance: f64,
}

impl Default for ConjugatePosterior {
    fn default() -> Self {
        Self { prior_variance: 1.0 }
    }
}

impl ConjugatePosterior {
    pub fn neg_log_density_at_zero(&self, y: &[f64], w: &[f64]) -> Result<f64> {
        let (sww, swy) = conjugate_moments(y, w)?;
        let precision = 1.0 / self.prior_variance + sww;
        let mean = swy / precision;
        Ok(LN_SQRT_2PI - 0.5 * precision.ln() + 0.5 * precision * mean * mean)
    }
}

impl TestStatistic for ConjugatePosterior {
    fn name(&self) -> &str {
        "t_pos_conjugate"
    }

    fn evaluate(&self, y: &[f64], w: &[f64], _x: &DMatrix<f64>) -> Result<f64> {
        self.neg_log_density_at_zero(y, w)
    }
}

/// `|mean(y | w = 1) − mean(y | w = 0)|`; nonzero treatments count as treated.
pub fn diff_in_means(y: &[f64], w: &[f64]) -> Result<f64> {
    check_len(y, w)?;
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (&yi, &wi) in y.iter().zip(w) {
        if wi != 0.0 {
            s1 += yi;
            n1 += 1;
        } else {
            s0 += yi;
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Error::DegenerateGroups);
    }
    Ok((s1 / n1 as f64 - s0 / n0 as f64).abs())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DiffInMeans;

impl TestStatistic for DiffInMeans {
    fn name(&self) -> &str {
        "diff_in_means"
    }

    fn evaluate(&self, y: &[f64], w: &[f64], _x: &DMatrix<f64>) -> Result<f64> {
        diff_in_means(y, w)
    }
}

/// Wraps any closure as a statistic; handy for tests and ad-hoc studies.
pub struct FnStatistic<F> {
    name: String,
    f: F,
}

impl<F> FnStatistic<F>
where
    F: Fn(&[f64], &[f64], &DMatrix<f64>) -> Result<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> TestStatistic for FnStatistic<F>
where
    F: Fn(&[f64], &[f64], &DMatrix<f64>) -> Result<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, y: &[f64], w: &[f64], x: &DMatrix<f64>) -> Result<f64> {
        (self.f)(y, w, x)
    }
}
