use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Regression design with an intercept in the first column.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix(DMatrix<f64>);

impl DesignMatrix {
    /// Wraps a matrix whose first column must be all ones.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() == 0 || matrix.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::Shape("first design column must be the intercept".into()));
        }
        Ok(Self(matrix))
    }

    /// `[1, regressors]`.
    pub fn with_intercept(regressors: &DMatrix<f64>) -> Self {
        let n = regressors.nrows();
        let mut m = DMatrix::from_element(n, regressors.ncols() + 1, 1.0);
        m.view_mut((0, 1), (n, regressors.ncols())).copy_from(regressors);
        Self(m)
    }

    /// `[1, column, regressors]`.
    pub fn with_intercept_and(column: &[f64], regressors: &DMatrix<f64>) -> Self {
        let n = regressors.nrows();
        assert_eq!(column.len(), n);
        let mut m = DMatrix::from_element(n, regressors.ncols() + 2, 1.0);
        m.column_mut(1).copy_from_slice(column);
        m.view_mut((0, 2), (n, regressors.ncols())).copy_from(regressors);
        Self(m)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self(self.0.select_rows(rows))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub coefficients: DVector<f64>,
    /// RSS / (n − k − 1).
    pub residual_variance: f64,
    pub coef_standard_errors: DVector<f64>,
    pub dof: usize,
}

impl OlsFit {
    pub fn sigma(&self) -> f64 {
        self.residual_variance.sqrt()
    }
}

/// Relative threshold on the diagonal of R below which a design is treated
/// as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// Thin QR factors `(Q, R)` of a full-rank design; errors if rank deficient.
pub fn thin_qr(design: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || r.diagonal().iter().any(|v| v.abs() <= RANK_TOL * scale) {
        return Err(Error::Singular);
    }
    Ok((qr.q(), r))
}

/// Ordinary least squares via Householder QR.
pub fn ols_fit(design: &DesignMatrix, y: &[f64]) -> Result<OlsFit> {
    let x = design.matrix();
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Shape(format!("{} responses for {n} design rows", y.len())));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} rows for {p} coefficients")));
    }
    let (q, r) = thin_qr(x)?;
    let y = DVector::from_column_slice(y);
    let qty = q.transpose() * &y;
    let coefficients = r.solve_upper_triangular(&qty).ok_or(Error::Singular)?;
    let resid = &y - x * &coefficients;
    let dof = n - p;
    let residual_variance = resid.norm_squared() / dof as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or(Error::Singular)?;
    // (XᵀX)⁻¹ = R⁻¹R⁻ᵀ, so its diagonal is the squared row norms of R⁻¹.
    let coef_standard_errors = DVector::from_iterator(
        p,
        r_inv
            .row_iter()
            .map(|row| (row.norm_squared() * residual_variance).sqrt()),
    );
    Ok(OlsFit {
        coefficients,
        residual_variance,
        coef_standard_errors,
        dof,
    })
}
