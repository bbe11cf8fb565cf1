//! Numerical primitives shared by every other module.

mod normal;
mod ols;
mod probit;
mod rng;

pub use normal::{log_normal_cdf, mills_ratio, normal_cdf, normal_pdf, normal_quantile, normal_sample};
pub use ols::{ols_fit, thin_qr as ols_thin_qr, DesignMatrix, OlsFit};
pub use probit::{probit_fit, probit_log_likelihood, ProbitFit, PROBIT_GRADIENT_TOL, PROBIT_MAX_ITER};
pub use rng::{derive_seed, RngStream};
