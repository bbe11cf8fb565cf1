//! Rejection-rate studies under true null hypotheses.

use crate::assignment::{fit_lottery_model, fit_null_outcome_model, lottery_sampler, sensitivity_sampler};
use crate::frt::{frt_p_value, Observed};
use crate::harness::synthetic::{known_design_null, LotteryWorld};
use crate::statistics::TPosLinear;
use crate::stats::derive_seed;
use crate::{par, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TypeIResult {
    pub alphas: Vec<f64>,
    /// Fraction of replications with `p ≤ alpha`, per alpha.
    pub rejection_rates: Vec<f64>,
    pub replications: usize,
    pub p_values: Vec<f64>,
}

impl TypeIResult {
    /// `√(r (1 − r) / reps)` at the nominal rate `r`.
    pub fn nominal_se(&self, alpha: f64) -> f64 {
        (alpha * (1.0 - alpha) / self.replications as f64).sqrt()
    }

    pub fn rate_at(&self, alpha: f64) -> Option<f64> {
        self.alphas.iter().position(|&a| a == alpha).map(|i| self.rejection_rates[i])
    }
}

/// Runs `replications` independent studies; replication `k` calls
/// `p_value(derive_seed(seed, k))`.
pub fn simulate_type_i<F>(replications: usize, alphas: &[f64], seed: u64, p_value: F) -> Result<TypeIResult>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    if replications == 0 {
        return Err(Error::Domain("at least one replication is required".into()));
    }
    let p_values = par::try_map_indices(replications, |k| p_value(derive_seed(seed, k as u64)))?;
    let rejection_rates = alphas
        .iter()
        .map(|&a| p_values.iter().filter(|&&p| p <= a).count() as f64 / replications as f64)
        .collect();
    Ok(TypeIResult {
        alphas: alphas.to_vec(),
        rejection_rates,
        replications,
        p_values,
    })
}

/// Known Bernoulli design, `Y` depending on `X` only, `T_pos` with `X` adjusted.
pub fn known_design_p_value(n: usize, draws: usize, seed: u64) -> Result<f64> {
    let (data, design) = known_design_null(n, seed)?;
    let y = data.outcome(0)?;
    let obs = Observed::new(&y, data.treatment(), data.covariates())?;
    Ok(frt_p_value(obs, &TPosLinear, &design, draws, derive_seed(seed, 1))?.p_value)
}

/// Lottery world with the assignment model estimated from the same data.
pub fn fitted_lottery_p_value(world: &LotteryWorld, draws: usize, seed: u64) -> Result<f64> {
    let data = world.sample(seed)?;
    let model = fit_lottery_model(&data)?;
    let sampler = lottery_sampler(&model, data.covariates())?;
    let y = data.outcome(0)?;
    let obs = Observed::new(&y, data.treatment(), data.covariates())?;
    Ok(frt_p_value(obs, &TPosLinear, &sampler, draws, derive_seed(seed, 1))?.p_value)
}

/// Confounded lottery world tested with the sensitivity sampler at the
/// world's true `ζ = ζ^W ζ^Y`.
pub fn sensitivity_p_value(world: &LotteryWorld, draws: usize, seed: u64) -> Result<f64> {
    let data = world.sample(seed)?;
    let model = fit_lottery_model(&data)?;
    let outcome_model = fit_null_outcome_model(&data, 0)?;
    let sampler = sensitivity_sampler(&model, &outcome_model, &data, world.zeta())?;
    let y = data.outcome(0)?;
    let obs = Observed::new(&y, data.treatment(), data.covariates())?;
    Ok(frt_p_value(obs, &TPosLinear, &sampler, draws, derive_seed(seed, 1))?.p_value)
}
