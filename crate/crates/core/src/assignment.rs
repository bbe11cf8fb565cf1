//! Sources of replicate treatment assignments.
//!
//! Known designs ([`BernoulliDesign`], [`CompleteRandomization`]) are exact;
//! the lottery samplers draw from a fitted two-stage model (probit for
//! winning, normal regression for the log prize among winners) and its
//! extension that shifts both stages by the standardized null-model outcome
//! residual scaled by a sensitivity parameter ζ.

use nalgebra::{DMatrix, DVector};

use crate::stats::{ols_fit, probit_fit, DesignMatrix, ProbitFit, RngStream};
use crate::{Error, Result};

/// Largest design that [`AssignmentSampler::enumerate_all`] will expand.
pub const MAX_ENUMERATION: usize = 100_000;

/// Observed outcomes (one column per post-treatment year), treatment and
/// covariates for `n` units.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    outcomes: DMatrix<f64>,
    treatment: Vec<f64>,
    covariates: DMatrix<f64>,
}

impl Dataset {
    pub fn new(outcomes: DMatrix<f64>, treatment: Vec<f64>, covariates: DMatrix<f64>) -> Result<Self> {
        let n = treatment.len();
        if outcomes.nrows() != n || covariates.nrows() != n {
            return Err(Error::Shape(format!(
                "outcomes {}, treatment {n}, covariates {} rows",
                outcomes.nrows(),
                covariates.nrows()
            )));
        }
        if outcomes.ncols() == 0 {
            return Err(Error::Shape("no outcome columns".into()));
        }
        if n < covariates.ncols() + 2 {
            return Err(Error::InsufficientData(format!(
                "{n} units for {} covariates",
                covariates.ncols()
            )));
        }
        let all_finite = outcomes.iter().chain(&treatment).chain(covariates.iter()).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::DataIntegrity("non-finite value".into()));
        }
        if let Some(i) = treatment.iter().position(|&w| w < 0.0) {
            return Err(Error::DataIntegrity(format!("negative treatment at row {i}")));
        }
        Ok(Self {
            outcomes,
            treatment,
            covariates,
        })
    }

    pub fn n_units(&self) -> usize {
        self.treatment.len()
    }

    pub fn n_years(&self) -> usize {
        self.outcomes.ncols()
    }

    pub fn outcomes(&self) -> &DMatrix<f64> {
        &self.outcomes
    }

    pub fn outcome(&self, year: usize) -> Result<Vec<f64>> {
        if year >= self.n_years() {
            return Err(Error::Domain(format!("year {year} not in 0..{}", self.n_years())));
        }
        Ok(self.outcomes.column(year).iter().copied().collect())
    }

    pub fn treatment(&self) -> &[f64] {
        &self.treatment
    }

    pub fn covariates(&self) -> &DMatrix<f64> {
        &self.covariates
    }

    pub fn winners(&self) -> Vec<bool> {
        self.treatment.iter().map(|&w| w > 0.0).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Bernoulli,
    CompleteRandomization,
    Lottery,
    LotterySensitivity,
}

/// One assignment of an enumerable design and its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedAssignment {
    pub treatment: Vec<f64>,
    pub probability: f64,
}

/// A seeded generator of replicate treatment vectors.
pub trait AssignmentSampler: Send + Sync {
    fn kind(&self) -> SamplerKind;

    fn n_units(&self) -> usize;

    fn sample(&self, stream: &mut RngStream) -> Vec<f64>;

    /// Every assignment with positive probability, for exact p-values.
    fn enumerate_all(&self) -> Result<Vec<WeightedAssignment>> {
        Err(Error::UnsupportedDesign(format!("{:?} sampler has no finite support", self.kind())))
    }
}

/// Independent Bernoulli assignment with unit-specific probabilities.
#[derive(Clone, Debug)]
pub struct BernoulliDesign {
    probabilities: Vec<f64>,
}

pub fn bernoulli_design(probabilities: Vec<f64>) -> Result<BernoulliDesign> {
    if let Some(p) = probabilities.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::Domain(format!("treatment probability {p} outside (0, 1)")));
    }
    Ok(BernoulliDesign { probabilities })
}

impl BernoulliDesign {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

impl AssignmentSampler for BernoulliDesign {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Bernoulli
    }

    fn n_units(&self) -> usize {
        self.probabilities.len()
    }

    fn sample(&self, stream: &mut RngStream) -> Vec<f64> {
        self.probabilities
            .iter()
            .map(|&p| if stream.uniform() < p { 1.0 } else { 0.0 })
            .collect()
    }

    fn enumerate_all(&self) -> Result<Vec<WeightedAssignment>> {
        let n = self.probabilities.len();
        if n >= 63 || (1usize << n) > MAX_ENUMERATION {
            return Err(Error::UnsupportedDesign(format!("2^{n} Bernoulli assignments")));
        }
        Ok((0..1usize << n)
            .map(|mask| {
                let treatment: Vec<f64> = (0..n).map(|i| ((mask >> i) & 1) as f64).collect();
                let probability = self
                    .probabilities
                    .iter()
                    .zip(&treatment)
                    .map(|(&p, &w)| if w == 1.0 { p } else { 1.0 - p })
                    .product();
                WeightedAssignment {
                    treatment,
                    probability,
                }
            })
            .collect())
    }
}

/// Uniform assignment of exactly `n_treated` of `n` units.
#[derive(Clone, Debug)]
pub struct CompleteRandomization {
    n: usize,
    n_treated: usize,
}

pub fn complete_randomization(n: usize, n_treated: usize) -> Result<CompleteRandomization> {
    if n_treated == 0 || n_treated >= n {
        return Err(Error::Domain(format!("need 0 < n_treated < n, got {n_treated} of {n}")));
    }
    Ok(CompleteRandomization { n, n_treated })
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

impl CompleteRandomization {
    pub fn n_treated(&self) -> usize {
        self.n_treated
    }

    pub fn n_assignments(&self) -> Option<usize> {
        binomial(self.n, self.n_treated)
    }
}

impl AssignmentSampler for CompleteRandomization {
    fn kind(&self) -> SamplerKind {
        SamplerKind::CompleteRandomization
    }

    fn n_units(&self) -> usize {
        self.n
    }

    fn sample(&self, stream: &mut RngStream) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..self.n).collect();
        for i in 0..self.n_treated {
            let j = i + stream.below(self.n - i);
            idx.swap(i, j);
        }
        let mut w = vec![0.0; self.n];
        for &i in &idx[..self.n_treated] {
            w[i] = 1.0;
        }
        w
    }

    fn enumerate_all(&self) -> Result<Vec<WeightedAssignment>> {
        let total = self
            .n_assignments()
            .filter(|&c| c <= MAX_ENUMERATION)
            .ok_or_else(|| Error::UnsupportedDesign(format!("C({}, {}) assignments", self.n, self.n_treated)))?;
        let probability = 1.0 / total as f64;
        let mut out = Vec::with_capacity(total);
        let mut comb: Vec<usize> = (0..self.n_treated).collect();
        loop {
            let mut treatment = vec![0.0; self.n];
            for &i in &comb {
                treatment[i] = 1.0;
            }
            out.push(WeightedAssignment {
                treatment,
                probability,
            });
            // next combination in lexicographic order
            let k = self.n_treated;
            let Some(pos) = (0..k).rev().find(|&i| comb[i] < self.n - k + i) else {
                break;
            };
            comb[pos] += 1;
            for i in pos + 1..k {
                comb[i] = comb[i - 1] + 1;
            }
        }
        Ok(out)
    }
}

/// Estimated parameters of the two-stage lottery assignment model.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedLotteryModel {
    /// Probit of winning on `[1, X]`.
    pub probit_part: ProbitFit,
    /// OLS of `ln W` on `[1, X]` among winners.
    pub log_prize_coefficients: DVector<f64>,
    pub log_prize_standard_errors: DVector<f64>,
    pub log_prize_sigma: f64,
    pub n_winners: usize,
}

/// Fits the probit winning model and the log-prize regression for winners.
pub fn fit_lottery_model(data: &Dataset) -> Result<FittedLotteryModel> {
    let x = data.covariates();
    let d = x.ncols();
    let winners = data.winners();
    let design = DesignMatrix::with_intercept(x);
    let probit_part = probit_fit(&design, &winners)?;
    let rows: Vec<usize> = (0..winners.len()).filter(|&i| winners[i]).collect();
    if rows.len() <= d + 2 {
        return Err(Error::InsufficientData(format!("{} winners for {d} covariates", rows.len())));
    }
    let log_prize: Vec<f64> = rows.iter().map(|&i| data.treatment()[i].ln()).collect();
    let fit = ols_fit(&design.select_rows(&rows), &log_prize)?;
    let log_prize_sigma = fit.sigma();
    if log_prize_sigma <= 0.0 {
        return Err(Error::DegenerateResidual);
    }
    Ok(FittedLotteryModel {
        probit_part,
        log_prize_standard_errors: fit.coef_standard_errors,
        log_prize_coefficients: fit.coefficients,
        log_prize_sigma,
        n_winners: rows.len(),
    })
}

/// Null outcome regression for one year: `Y_year` on `[1, X]`, treatment excluded.
#[derive(Clone, Debug, PartialEq)]
pub struct NullOutcomeModel {
    pub coefficients: DVector<f64>,
    pub sigma: f64,
    pub year: usize,
}

impl NullOutcomeModel {
    pub fn is_degenerate(&self) -> bool {
        !(self.sigma > 0.0)
    }

    /// `(Y − [1, X]θ̂) / σ̂` per unit.
    pub fn standardized_residuals(&self, data: &Dataset) -> Result<Vec<f64>> {
        if self.is_degenerate() {
            return Err(Error::DegenerateResidual);
        }
        let y = data.outcome(self.year)?;
        let fitted = DesignMatrix::with_intercept(data.covariates()).matrix() * &self.coefficients;
        Ok(y.iter().zip(fitted.iter()).map(|(yi, fi)| (yi - fi) / self.sigma).collect())
    }
}

/// Residual scale treated as zero for the degenerate-model check.
const RESIDUAL_SCALE_TOL: f64 = 1e-12;

pub fn fit_null_outcome_model(data: &Dataset, year: usize) -> Result<NullOutcomeModel> {
    let y = data.outcome(year)?;
    let fit = ols_fit(&DesignMatrix::with_intercept(data.covariates()), &y)?;
    let y_scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let sigma = if fit.sigma() <= RESIDUAL_SCALE_TOL * y_scale {
        0.0
    } else {
        fit.sigma()
    };
    Ok(NullOutcomeModel {
        coefficients: fit.coefficients,
        sigma,
        year,
    })
}

/// Two-stage lottery sampler, optionally with the outcome-proxy shift.
///
/// Per unit, in ascending order, one `ξ` and then one `ν` are drawn from the
/// stream whether or not the unit wins. With shift `s = ζ·r` and
/// `c = √(1 − ζ²)`:
///
/// ```text
/// win   = 1{ index_k + s + c·ξ > 0 }
/// ln W  = index_w + σ_w (s + c·ν)   if win, else W = 0
/// ```
///
/// Without a proxy `s = 0` and `c = 1`, which is the plain fitted model.
#[derive(Clone, Debug)]
pub struct LotterySampler {
    win_index: Vec<f64>,
    prize_index: Vec<f64>,
    prize_sigma: f64,
    proxy: Option<OutcomeProxy>,
}

#[derive(Clone, Debug)]
struct OutcomeProxy {
    residuals: Vec<f64>,
    zeta: f64,
}

pub fn lottery_sampler(model: &FittedLotteryModel, covariates: &DMatrix<f64>) -> Result<LotterySampler> {
    let p = model.probit_part.coefficients.len();
    if covariates.ncols() + 1 != p || model.log_prize_coefficients.len() != p {
        return Err(Error::Shape(format!(
            "model has {p} coefficients, covariates have {} columns",
            covariates.ncols()
        )));
    }
    if !(model.log_prize_sigma > 0.0) {
        return Err(Error::DegenerateResidual);
    }
    let design = DesignMatrix::with_intercept(covariates);
    Ok(LotterySampler {
        win_index: (design.matrix() * &model.probit_part.coefficients).iter().copied().collect(),
        prize_index: (design.matrix() * &model.log_prize_coefficients).iter().copied().collect(),
        prize_sigma: model.log_prize_sigma,
        proxy: None,
    })
}

/// Lottery sampler whose latent winning index and log prize are shifted by
/// `ζ` times the standardized residual of the null outcome model.
pub fn sensitivity_sampler(
    model: &FittedLotteryModel,
    outcome_model: &NullOutcomeModel,
    data: &Dataset,
    zeta: f64,
) -> Result<LotterySampler> {
    let residuals = outcome_model.standardized_residuals(data)?;
    sensitivity_sampler_from_residuals(model, data.covariates(), residuals, zeta)
}

/// As [`sensitivity_sampler`] with precomputed standardized residuals.
pub fn sensitivity_sampler_from_residuals(
    model: &FittedLotteryModel,
    covariates: &DMatrix<f64>,
    residuals: Vec<f64>,
    zeta: f64,
) -> Result<LotterySampler> {
    if !(zeta.abs() < 1.0) {
        return Err(Error::Domain(format!("sensitivity parameter {zeta} outside (-1, 1)")));
    }
    if residuals.len() != covariates.nrows() {
        return Err(Error::Shape(format!("{} residuals for {} units", residuals.len(), covariates.nrows())));
    }
    let mut sampler = lottery_sampler(model, covariates)?;
    sampler.proxy = Some(OutcomeProxy { residuals, zeta });
    Ok(sampler)
}

impl LotterySampler {
    pub fn zeta(&self) -> f64 {
        self.proxy.as_ref().map_or(0.0, |p| p.zeta)
    }

    pub fn win_index(&self) -> &[f64] {
        &self.win_index
    }

    /// Re-targets a sensitivity sampler at another ζ without refitting.
    pub fn with_zeta(&self, zeta: f64) -> Result<LotterySampler> {
        if !(zeta.abs() < 1.0) {
            return Err(Error::Domain(format!("sensitivity parameter {zeta} outside (-1, 1)")));
        }
        let mut out = self.clone();
        match &mut out.proxy {
            Some(p) => p.zeta = zeta,
            None => return Err(Error::Domain("sampler has no outcome proxy".into())),
        }
        Ok(out)
    }
}

impl AssignmentSampler for LotterySampler {
    fn kind(&self) -> SamplerKind {
        if self.proxy.is_some() {
            SamplerKind::LotterySensitivity
        } else {
            SamplerKind::Lottery
        }
    }

    fn n_units(&self) -> usize {
        self.win_index.len()
    }

    fn sample(&self, stream: &mut RngStream) -> Vec<f64> {
        let (zeta, residuals) = match &self.proxy {
            Some(p) => (p.zeta, Some(p.residuals.as_slice())),
            None => (0.0, None),
        };
        let noise = (1.0 - zeta * zeta).sqrt();
        (0..self.win_index.len())
            .map(|i| {
                let xi = stream.standard_normal();
                let nu = stream.standard_normal();
                let shift = residuals.map_or(0.0, |r| zeta * r[i]);
                if self.win_index[i] + shift + noise * xi > 0.0 {
                    (self.prize_index[i] + self.prize_sigma * (shift + noise * nu)).exp()
                } else {
                    0.0
                }
            })
            .collect()
    }
}
