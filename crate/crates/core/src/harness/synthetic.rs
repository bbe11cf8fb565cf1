//! Synthetic data generators for the simulation suites.

use nalgebra::DMatrix;

use crate::assignment::{bernoulli_design, BernoulliDesign, Dataset};
use crate::stats::{normal_cdf, RngStream};
use crate::Result;

/// Two-stage lottery world with an optional latent confounder.
///
/// Covariates are `x₁ ~ N(0, 1)` and `x₂ ~ Bernoulli(0.4)`. With a shared
/// `U ~ N(0, 1)` per unit:
///
/// ```text
/// Y_j  = a_j + X d_j + b_j W + σ_j (ζ^Y U + √(1 − ζ^Y²) ε_j)
/// K    = 1{ a_k + X d_k + ζ^W U + √(1 − ζ^W²) ξ > 0 }
/// ln W = a_w + X d_w + σ_w (ζ^W U + √(1 − ζ^W²) ν)     if K = 1, else W = 0
/// ```
///
/// `b_j = 0` and `ζ^W ζ^Y = 0` make `Y ⊥ W | X`; `b_j = 0` alone makes
/// `Y ⊥ W | X, U`.
#[derive(Clone, Debug, PartialEq)]
pub struct LotteryWorld {
    pub n: usize,
    /// `(a_k, d_k)`.
    pub win: [f64; 3],
    /// `(a_w, d_w)`.
    pub prize: [f64; 3],
    pub prize_sigma: f64,
    /// `(a_j, d_j)` per year.
    pub outcome: Vec<[f64; 3]>,
    pub outcome_sigma: f64,
    /// `b_j` per year.
    pub effects: Vec<f64>,
    pub zeta_w: f64,
    pub zeta_y: f64,
}

impl LotteryWorld {
    /// A single-year world in which the null of no effect holds.
    pub fn null(n: usize) -> Self {
        Self {
            n,
            win: [-0.3, 0.5, -0.4],
            prize: [2.0, 0.3, 0.2],
            prize_sigma: 0.6,
            outcome: vec![[1.0, 0.8, -0.5]],
            outcome_sigma: 1.5,
            effects: vec![0.0],
            zeta_w: 0.0,
            zeta_y: 0.0,
        }
    }

    pub fn with_confounding(mut self, zeta_w: f64, zeta_y: f64) -> Self {
        self.zeta_w = zeta_w;
        self.zeta_y = zeta_y;
        self
    }

    /// Replaces the per-year effects; outcome coefficients are recycled.
    pub fn with_effects(mut self, effects: Vec<f64>) -> Self {
        let base = self.outcome[0];
        self.outcome = vec![base; effects.len()];
        self.effects = effects;
        self
    }

    /// The identified product `ζ^W ζ^Y`.
    pub fn zeta(&self) -> f64 {
        self.zeta_w * self.zeta_y
    }

    pub fn sample(&self, seed: u64) -> Result<Dataset> {
        let n = self.n;
        let years = self.effects.len();
        let mut s = RngStream::new(seed, 0);
        let mut x = DMatrix::zeros(n, 2);
        let mut w = vec![0.0; n];
        let mut y = DMatrix::zeros(n, years);
        let cw = (1.0 - self.zeta_w * self.zeta_w).sqrt();
        let cy = (1.0 - self.zeta_y * self.zeta_y).sqrt();
        let lin = |c: &[f64; 3], x1: f64, x2: f64| c[0] + c[1] * x1 + c[2] * x2;
        for i in 0..n {
            let x1 = s.standard_normal();
            let x2 = if s.uniform() < 0.4 { 1.0 } else { 0.0 };
            x[(i, 0)] = x1;
            x[(i, 1)] = x2;
            let u = s.standard_normal();
            let xi = s.standard_normal();
            let nu = s.standard_normal();
            if lin(&self.win, x1, x2) + self.zeta_w * u + cw * xi > 0.0 {
                w[i] = (lin(&self.prize, x1, x2) + self.prize_sigma * (self.zeta_w * u + cw * nu)).exp();
            }
            for j in 0..years {
                let eps = s.standard_normal();
                y[(i, j)] = lin(&self.outcome[j], x1, x2)
                    + self.effects[j] * w[i]
                    + self.outcome_sigma * (self.zeta_y * u + cy * eps);
            }
        }
        Dataset::new(y, w, x)
    }
}

/// Known Bernoulli design `W ~ Bernoulli(Φ(0.5 x))` with `Y = x + ε`
/// independent of `W` given `x`.
pub fn known_design_null(n: usize, seed: u64) -> Result<(Dataset, BernoulliDesign)> {
    let mut s = RngStream::new(seed, 0);
    let mut x = DMatrix::zeros(n, 1);
    let mut probs = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut y = DMatrix::zeros(n, 1);
    for i in 0..n {
        let xi = s.standard_normal();
        x[(i, 0)] = xi;
        probs[i] = normal_cdf(0.5 * xi);
        w[i] = if s.uniform() < probs[i] { 1.0 } else { 0.0 };
        y[(i, 0)] = xi + s.standard_normal();
    }
    Ok((Dataset::new(y, w, x)?, bernoulli_design(probs)?))
}

/// Conjugate toy data `y ~ N(b w, I)` under a Bernoulli(1/2) assignment.
pub fn conjugate_data(n: usize, effect: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut s = RngStream::new(seed, 0);
    let w: Vec<f64> = (0..n).map(|_| if s.uniform() < 0.5 { 1.0 } else { 0.0 }).collect();
    let y = w.iter().map(|&wi| effect * wi + s.standard_normal()).collect();
    (y, w)
}
