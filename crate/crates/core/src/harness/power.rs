//! Bayesian Type I error and power of exact-level randomized rules in the
//! conjugate toy family `y ~ N(b w, I)`.

use nalgebra::DMatrix;

use crate::assignment::AssignmentSampler;
use crate::frt::{decision_rule_from_atoms, ExactDistribution};
use crate::statistics::{BayesSpec, TestStatistic};
use crate::stats::RngStream;
use crate::{par, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct StatisticPower {
    pub name: String,
    /// `α_B`: mean rejection probability over draws from `Θ₀`.
    pub bayesian_type_i: Option<f64>,
    /// `β_B`: mean rejection probability over draws from `Θ₁`.
    pub bayesian_power: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSimResult {
    pub alpha: f64,
    pub replications: usize,
    pub null_draws: usize,
    pub alternative_draws: usize,
    pub statistics: Vec<StatisticPower>,
}

impl PowerSimResult {
    pub fn get(&self, name: &str) -> Option<&StatisticPower> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// `√(r (1 − r) / m)` for a rate over `m` draws.
    pub fn rate_se(rate: f64, draws: usize) -> f64 {
        (rate * (1.0 - rate) / draws as f64).sqrt()
    }
}

/// Draws `(H, b, W, y)` from the prior and model, then applies each
/// statistic's exact-level randomized rule, conditional on `y`, using its
/// rejection probability rather than a coin flip.
///
/// Replication `r` uses stream `(seed, r)`; `alpha = 0` never rejects.
pub fn simulate_bayes_power(
    design: &dyn AssignmentSampler,
    statistics: &[&dyn TestStatistic],
    spec: BayesSpec,
    alpha: f64,
    replications: usize,
    seed: u64,
) -> Result<PowerSimResult> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha {alpha} outside [0, 1)")));
    }
    if !(0.0..=1.0).contains(&spec.prob_alternative) || !(spec.prior_variance > 0.0) {
        return Err(Error::Domain("invalid prior specification".into()));
    }
    let assignments = design.enumerate_all()?;
    let n = design.n_units();
    let x = DMatrix::zeros(n, 0);
    let tau = spec.prior_variance.sqrt();
    let per_rep = par::try_map_indices(replications, |r| -> Result<(bool, Vec<f64>)> {
        let mut s = RngStream::new(seed, r as u64);
        let alternative = s.uniform() < spec.prob_alternative;
        let b = if alternative { tau * s.standard_normal() } else { 0.0 };
        let w = design.sample(&mut s);
        let y: Vec<f64> = w.iter().map(|&wi| b * wi + s.standard_normal()).collect();
        let mut deltas = Vec::with_capacity(statistics.len());
        for stat in statistics {
            if alpha == 0.0 {
                deltas.push(0.0);
                continue;
            }
            let bound = stat.bind(&y, &x)?;
            let dist = ExactDistribution::new(bound.as_ref(), &assignments);
            let p = dist.p_at(bound.eval(&w)?);
            let rule = decision_rule_from_atoms(dist.p_value_atoms(), alpha)?;
            deltas.push(rule.rejection_probability(p));
        }
        Ok((alternative, deltas))
    })?;
    let alternative_draws = per_rep.iter().filter(|r| r.0).count();
    let null_draws = replications - alternative_draws;
    let mean = |k: usize, alt: bool, m: usize| -> Option<f64> {
        (m > 0).then(|| per_rep.iter().filter(|r| r.0 == alt).map(|r| r.1[k]).sum::<f64>() / m as f64)
    };
    let statistics = statistics
        .iter()
        .enumerate()
        .map(|(k, s)| StatisticPower {
            name: s.name().to_string(),
            bayesian_type_i: mean(k, false, null_draws),
            bayesian_power: mean(k, true, alternative_draws),
        })
        .collect();
    Ok(PowerSimResult {
        alpha,
        replications,
        null_draws,
        alternative_draws,
        statistics,
    })
}
