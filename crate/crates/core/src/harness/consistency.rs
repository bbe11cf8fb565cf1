//! Agreement checks: Bayes factor against posterior-density statistic, and
//! the smoothed sensitivity curve against dense Monte Carlo.

use crate::assignment::{bernoulli_design, fit_lottery_model, fit_null_outcome_model, sensitivity_sampler, Dataset};
use crate::frt::{frt_p_value, Observed};
use crate::harness::synthetic::conjugate_data;
use crate::sensitivity::{curve_from_sampler, nw_smooth, CurveSettings, SensitivityCurve, OVERTURN_MESH_STEP};
use crate::statistics::{BayesSpec, ConjugateBayesFactor, ConjugatePosterior, TestStatistic};
use crate::stats::derive_seed;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PValuePair {
    pub seed: u64,
    pub via_bayes_factor: f64,
    pub via_posterior: f64,
}

/// Monte Carlo p-values from the Bayes factor and from the posterior
/// density at zero, on the same data with the same replicate seed.
pub fn bayes_factor_posterior_pairs(
    seeds: usize,
    n: usize,
    draws: usize,
    spec: BayesSpec,
    seed: u64,
) -> Result<Vec<PValuePair>> {
    let bf = ConjugateBayesFactor {
        prior_variance: spec.prior_variance,
    };
    let post = ConjugatePosterior {
        prior_variance: spec.prior_variance,
    };
    let design = bernoulli_design(vec![0.5; n])?;
    let x = nalgebra::DMatrix::zeros(n, 0);
    (0..seeds as u64)
        .map(|k| {
            let s = derive_seed(seed, k);
            let (y, w) = conjugate_data(n, 0.5, s);
            let obs = Observed::new(&y, &w, &x)?;
            let frt_seed = derive_seed(s, 1);
            Ok(PValuePair {
                seed: s,
                via_bayes_factor: frt_p_value(obs, &bf, &design, draws, frt_seed)?.p_value,
                via_posterior: frt_p_value(obs, &post, &design, draws, frt_seed)?.p_value,
            })
        })
        .collect()
}

/// Fitted models and data for one sensitivity study.
pub struct SensitivityStudy<'a> {
    pub data: &'a Dataset,
    pub year: usize,
    pub statistic: &'a dyn TestStatistic,
}

impl SensitivityStudy<'_> {
    fn base_sampler(&self) -> Result<crate::assignment::LotterySampler> {
        let model = fit_lottery_model(self.data)?;
        let outcome_model = fit_null_outcome_model(self.data, self.year)?;
        sensitivity_sampler(&model, &outcome_model, self.data, 0.0)
    }

    pub fn curve(&self, settings: &CurveSettings, seed: u64) -> Result<SensitivityCurve> {
        let y = self.data.outcome(self.year)?;
        curve_from_sampler(&y, self.data, self.statistic, &self.base_sampler()?, settings, self.year, seed)
    }

    /// Monte Carlo p-value with the sensitivity sampler fixed at `zeta`.
    pub fn dense_p_value(&self, zeta: f64, draws: usize, seed: u64) -> Result<f64> {
        let y = self.data.outcome(self.year)?;
        let sampler = self.base_sampler()?.with_zeta(zeta)?;
        let obs = Observed::new(&y, self.data.treatment(), self.data.covariates())?;
        Ok(frt_p_value(obs, self.statistic, &sampler, draws, seed)?.p_value)
    }
}

/// Largest absolute difference between two curves over the interior of
/// `coarse`, on a mesh of step [`OVERTURN_MESH_STEP`].
pub fn sup_norm_difference(coarse: &SensitivityCurve, fine: &SensitivityCurve) -> Result<f64> {
    let (a, b) = coarse.interior();
    let start = (a / OVERTURN_MESH_STEP).ceil() as i64;
    let end = (b / OVERTURN_MESH_STEP).floor() as i64;
    let mut sup: f64 = 0.0;
    for k in start..=end {
        let z = k as f64 * OVERTURN_MESH_STEP;
        if fine.in_interior(z) {
            sup = sup.max((nw_smooth(coarse, z)? - nw_smooth(fine, z)?).abs());
        }
    }
    Ok(sup)
}
