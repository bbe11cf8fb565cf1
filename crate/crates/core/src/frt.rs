//! Fisher randomization p-values.
//!
//! The Monte Carlo estimate uses the add-one convention
//! `(1 + #{T_rep ≥ T_obs}) / (R + 1)`. Replicate `r` draws its assignment
//! from stream `(seed, r)` and the exceedance count is an integer sum, so
//! the result does not depend on thread count or evaluation order.

use nalgebra::DMatrix;

use crate::assignment::{AssignmentSampler, WeightedAssignment};
use crate::par;
use crate::statistics::{BoundStatistic, TestStatistic};
use crate::stats::RngStream;
use crate::{Error, Result};

/// Observed outcomes, treatment and covariates for one test.
#[derive(Clone, Copy, Debug)]
pub struct Observed<'a> {
    pub y: &'a [f64],
    pub w: &'a [f64],
    pub x: &'a DMatrix<f64>,
}

impl<'a> Observed<'a> {
    pub fn new(y: &'a [f64], w: &'a [f64], x: &'a DMatrix<f64>) -> Result<Self> {
        if y.len() != w.len() || x.nrows() != y.len() {
            return Err(Error::Shape(format!(
                "{} outcomes, {} treatments, {} covariate rows",
                y.len(),
                w.len(),
                x.nrows()
            )));
        }
        Ok(Self { y, w, x })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrtResult {
    pub observed_statistic: f64,
    /// `−∞` where the statistic was undefined on the replicate.
    pub replicate_statistics: Vec<f64>,
    pub p_value: f64,
    pub draws: usize,
    pub seed: u64,
    pub degenerate_replicates: usize,
}

/// `(1 + #{t ≥ observed}) / (R + 1)`.
pub fn add_one_p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&t| t >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Evaluates a bound statistic on one replicate, mapping undefined values to `−∞`.
pub(crate) fn replicate_statistic(bound: &dyn BoundStatistic, w: &[f64]) -> f64 {
    bound.eval(w).unwrap_or(f64::NEG_INFINITY)
}

/// Monte Carlo Fisher p-value with `draws` replicate assignments.
pub fn frt_p_value(
    data: Observed<'_>,
    statistic: &dyn TestStatistic,
    sampler: &dyn AssignmentSampler,
    draws: usize,
    seed: u64,
) -> Result<FrtResult> {
    if draws == 0 {
        return Err(Error::Domain("at least one draw is required".into()));
    }
    if sampler.n_units() != data.y.len() {
        return Err(Error::Shape(format!("sampler has {} units, data {}", sampler.n_units(), data.y.len())));
    }
    let bound = statistic.bind(data.y, data.x)?;
    let observed_statistic = bound.eval(data.w)?;
    let replicate_statistics = par::map_indices(draws, |r| {
        let w = sampler.sample(&mut RngStream::new(seed, r as u64));
        replicate_statistic(bound.as_ref(), &w)
    });
    let degenerate_replicates = replicate_statistics.iter().filter(|t| **t == f64::NEG_INFINITY).count();
    Ok(FrtResult {
        p_value: add_one_p_value(observed_statistic, &replicate_statistics),
        observed_statistic,
        replicate_statistics,
        draws,
        seed,
        degenerate_replicates,
    })
}

/// Randomization distribution of a statistic over an enumerable design.
///
/// Assignments are sorted by decreasing statistic and the p-value of each
/// tie group is the cumulative probability through the end of the group,
/// so every lookup of the same statistic value returns identical bits.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    /// Statistic values, sorted decreasing.
    sorted: Vec<f64>,
    /// Probability of each sorted entry.
    mass: Vec<f64>,
    /// Cumulative probability through the end of each entry's tie group.
    tail: Vec<f64>,
}

impl ExactDistribution {
    pub fn new(bound: &dyn BoundStatistic, assignments: &[WeightedAssignment]) -> Self {
        let stats = par::map_indices(assignments.len(), |i| replicate_statistic(bound, &assignments[i].treatment));
        let mut order: Vec<usize> = (0..assignments.len()).collect();
        order.sort_by(|&a, &b| stats[b].total_cmp(&stats[a]).then(a.cmp(&b)));
        let sorted: Vec<f64> = order.iter().map(|&i| stats[i]).collect();
        let mass: Vec<f64> = order.iter().map(|&i| assignments[i].probability).collect();
        let mut tail = vec![0.0; sorted.len()];
        let mut acc = 0.0;
        let mut start = 0;
        while start < sorted.len() {
            let mut end = start;
            while end < sorted.len() && sorted[end] == sorted[start] {
                acc += mass[end];
                end += 1;
            }
            tail[start..end].fill(acc);
            start = end;
        }
        Self { sorted, mass, tail }
    }

    /// `Pr(T(W) ≥ t)` under the design.
    pub fn p_at(&self, t: f64) -> f64 {
        let count = self.sorted.partition_point(|&s| s >= t);
        if count == 0 {
            0.0
        } else {
            self.tail[count - 1]
        }
    }

    /// Atoms of the p-value distribution `p(W)`, ascending, with their mass.
    pub fn p_value_atoms(&self) -> Vec<(f64, f64)> {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (&p, &m) in self.tail.iter().zip(&self.mass) {
            match atoms.last_mut() {
                Some(last) if last.0 == p => last.1 += m,
                _ => atoms.push((p, m)),
            }
        }
        atoms
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

fn enumerate(sampler: &dyn AssignmentSampler, n: usize) -> Result<Vec<WeightedAssignment>> {
    if sampler.n_units() != n {
        return Err(Error::Shape(format!("sampler has {} units, data {n}", sampler.n_units())));
    }
    sampler.enumerate_all()
}

/// Exact Fisher p-value `Σ_w Pr(w) 1{T(Y, w, X) ≥ T_obs}`.
pub fn frt_p_value_exact(data: Observed<'_>, statistic: &dyn TestStatistic, sampler: &dyn AssignmentSampler) -> Result<f64> {
    let assignments = enumerate(sampler, data.y.len())?;
    let bound = statistic.bind(data.y, data.x)?;
    let observed = bound.eval(data.w)?;
    Ok(ExactDistribution::new(bound.as_ref(), &assignments).p_at(observed))
}

/// Exact-level randomized rule: reject if `p < α⁺`, with probability `q`
/// if `p = α⁺`, never if `p > α⁺`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionRule {
    pub alpha: f64,
    pub alpha_plus: f64,
    pub tie_probability: f64,
    /// p-value atoms `(p, Pr(p(W) = p))`, ascending.
    pub atoms: Vec<(f64, f64)>,
}

impl DecisionRule {
    /// `δ(p)`.
    pub fn rejection_probability(&self, p: f64) -> f64 {
        if p < self.alpha_plus {
            1.0
        } else if p == self.alpha_plus {
            self.tie_probability
        } else {
            0.0
        }
    }

    /// `Σ_atoms Pr(p) δ(p)`, which equals α by construction.
    pub fn exact_level(&self) -> f64 {
        self.atoms.iter().map(|&(p, m)| m * self.rejection_probability(p)).sum()
    }
}

const LEVEL_TOL: f64 = 1e-12;

/// Builds the rule from the atoms of the p-value distribution.
///
/// `α⁺` is the smallest atom whose cumulative mass reaches α and
/// `q = (α − F(α⁺⁻)) / Pr(p = α⁺)`. When α falls exactly on a cumulative
/// boundary this gives `q = 1` on that atom, the same rule as taking the
/// next atom with `q = 0`.
pub fn decision_rule_from_atoms(atoms: Vec<(f64, f64)>, alpha: f64) -> Result<DecisionRule> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    let mut below = 0.0;
    for &(p, m) in &atoms {
        if below + m >= alpha - LEVEL_TOL {
            let tie_probability = ((alpha - below) / m).clamp(0.0, 1.0);
            return Ok(DecisionRule {
                alpha,
                alpha_plus: p,
                tie_probability,
                atoms,
            });
        }
        below += m;
    }
    Err(Error::Domain("p-value atoms carry less than alpha mass".into()))
}

/// Exact-level randomized decision rule for an enumerable design.
pub fn build_decision_rule(
    y: &[f64],
    x: &DMatrix<f64>,
    statistic: &dyn TestStatistic,
    sampler: &dyn AssignmentSampler,
    alpha: f64,
) -> Result<DecisionRule> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    let assignments = enumerate(sampler, y.len())?;
    let bound = statistic.bind(y, x)?;
    decision_rule_from_atoms(ExactDistribution::new(bound.as_ref(), &assignments).p_value_atoms(), alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{bernoulli_design, complete_randomization};
    use crate::statistics::{diff_in_means, DiffInMeans, FnStatistic, TPosLinear};

    fn no_x(n: usize) -> DMatrix<f64> {
        DMatrix::zeros(n, 0)
    }

    #[test]
    fn constant_statistic_gives_one() {
        let stat = FnStatistic::new("const", |_: &[f64], _: &[f64], _: &DMatrix<f64>| Ok(3.0));
        let x = no_x(6);
        let (y, w) = ([0.0; 6], [1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let cr = complete_randomization(6, 3).unwrap();
        let res = frt_p_value(Observed::new(&y, &w, &x).unwrap(), &stat, &cr, 200, 1).unwrap();
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn extreme_observation_gives_minimum() {
        let stat = FnStatistic::new("obs", |_: &[f64], w: &[f64], _: &DMatrix<f64>| Ok(if w[0] == 7.0 { 1.0 } else { 0.0 }));
        let x = no_x(4);
        let y = [0.0; 4];
        let w = [7.0, 0.0, 0.0, 0.0];
        let cr = complete_randomization(4, 2).unwrap();
        let res = frt_p_value(Observed::new(&y, &w, &x).unwrap(), &stat, &cr, 99, 2).unwrap();
        assert_eq!(res.p_value, 1.0 / 100.0);
    }

    #[test]
    fn one_draw_p_is_half_or_one() {
        let x = no_x(8);
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let w = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let cr = complete_randomization(8, 4).unwrap();
        for seed in 0..20 {
            let p = frt_p_value(Observed::new(&y, &w, &x).unwrap(), &DiffInMeans, &cr, 1, seed).unwrap().p_value;
            assert!(p == 0.5 || p == 1.0);
        }
    }

    #[test]
    fn monte_carlo_tracks_exact_enumeration() {
        let x = no_x(4);
        let y = [3.0, 1.0, 2.0, 0.5];
        let w = [1.0, 0.0, 1.0, 0.0];
        let cr = complete_randomization(4, 2).unwrap();
        let obs = Observed::new(&y, &w, &x).unwrap();
        let exact = frt_p_value_exact(obs, &DiffInMeans, &cr).unwrap();
        let mc = frt_p_value(obs, &DiffInMeans, &cr, 60_000, 3).unwrap().p_value;
        assert!((mc - exact).abs() < 0.01, "{mc} vs {exact}");
    }

    #[test]
    fn two_units_exact() {
        let x = no_x(2);
        let cr = complete_randomization(2, 1).unwrap();
        for y in [[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]] {
            let p = frt_p_value_exact(Observed::new(&y, &[1.0, 0.0], &x).unwrap(), &DiffInMeans, &cr).unwrap();
            assert!(p == 0.5 || p == 1.0);
        }
    }

    #[test]
    fn point_mass_statistic() {
        let w_obs = vec![0.0, 1.0, 1.0, 0.0, 1.0];
        let target = w_obs.clone();
        let stat = FnStatistic::new("is_obs", move |_: &[f64], w: &[f64], _: &DMatrix<f64>| Ok((w == target.as_slice()) as u8 as f64));
        let x = no_x(5);
        let cr = complete_randomization(5, 3).unwrap();
        let p = frt_p_value_exact(Observed::new(&[0.0; 5], &w_obs, &x).unwrap(), &stat, &cr).unwrap();
        assert!((p - 0.1).abs() < 1e-15);
    }

    #[test]
    fn matches_hand_enumeration_of_twenty_splits() {
        let y = [2.3, -0.4, 1.7, 0.9, -1.2, 0.1];
        let w = [1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let t_obs = diff_in_means(&y, &w).unwrap();
        let mut hits = 0;
        let mut total = 0;
        for mask in 0u32..64 {
            if mask.count_ones() != 3 {
                continue;
            }
            let wm: Vec<f64> = (0..6).map(|i| ((mask >> i) & 1) as f64).collect();
            total += 1;
            if diff_in_means(&y, &wm).unwrap() >= t_obs {
                hits += 1;
            }
        }
        assert_eq!(total, 20);
        let x = no_x(6);
        let cr = complete_randomization(6, 3).unwrap();
        let p = frt_p_value_exact(Observed::new(&y, &w, &x).unwrap(), &DiffInMeans, &cr).unwrap();
        assert!((p - hits as f64 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn non_enumerable_design_unsupported() {
        let x = no_x(30);
        let y = vec![0.0; 30];
        let w: Vec<f64> = (0..30).map(|i| (i % 2) as f64).collect();
        let b = bernoulli_design(vec![0.5; 30]).unwrap();
        assert!(matches!(
            frt_p_value_exact(Observed::new(&y, &w, &x).unwrap(), &DiffInMeans, &b),
            Err(Error::UnsupportedDesign(_))
        ));
        assert!(matches!(build_decision_rule(&y, &x, &DiffInMeans, &b, 0.05), Err(Error::UnsupportedDesign(_))));
    }

    #[test]
    fn single_atom_rule() {
        let atoms = vec![(0.05, 0.05), (0.5, 0.45), (1.0, 0.5)];
        let rule = decision_rule_from_atoms(atoms, 0.01).unwrap();
        assert_eq!(rule.alpha_plus, 0.05);
        assert!((rule.tie_probability - 0.01 / 0.05).abs() < 1e-15);
        assert!((rule.exact_level() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn atom_aligned_level_is_deterministic() {
        let atoms = vec![(0.05, 0.05), (0.15, 0.1), (1.0, 0.85)];
        let rule = decision_rule_from_atoms(atoms, 0.15).unwrap();
        assert_eq!(rule.alpha_plus, 0.15);
        assert!((rule.tie_probability - 1.0).abs() < 1e-12);
        assert_eq!(rule.rejection_probability(0.05), 1.0);
        assert_eq!(rule.rejection_probability(1.0), 0.0);
    }

    #[test]
    fn six_unit_rule_has_exact_level() {
        let y = [2.3, -0.4, 1.7, 0.9, -1.2, 0.1];
        let x = no_x(6);
        let cr = complete_randomization(6, 3).unwrap();
        let rule = build_decision_rule(&y, &x, &DiffInMeans, &cr, 0.1).unwrap();
        // Independent check: average δ(p(w)) over all 20 assignments.
        let all = cr.enumerate_all().unwrap();
        let level: f64 = all
            .iter()
            .map(|a| {
                let p = frt_p_value_exact(Observed::new(&y, &a.treatment, &x).unwrap(), &DiffInMeans, &cr).unwrap();
                a.probability * rule.rejection_probability(p)
            })
            .sum();
        assert!((level - 0.1).abs() < 1e-12, "{level}");
    }

    #[test]
    fn strictly_increasing_transform_leaves_p_unchanged() {
        let n = 40;
        let mut s = RngStream::new(21, 0);
        let x = DMatrix::from_fn(n, 1, |_, _| s.standard_normal());
        let y: Vec<f64> = (0..n).map(|i| x[(i, 0)] + s.standard_normal()).collect();
        let w: Vec<f64> = (0..n).map(|_| if s.uniform() < 0.5 { 1.0 } else { 0.0 }).collect();
        let transformed = FnStatistic::new("exp3", |y: &[f64], w: &[f64], x: &DMatrix<f64>| {
            crate::statistics::t_pos_linear(y, w, x).map(|t| (3.0 * t).exp() + 5.0)
        });
        let design = bernoulli_design(vec![0.5; n]).unwrap();
        let obs = Observed::new(&y, &w, &x).unwrap();
        for seed in 0..10 {
            let a = frt_p_value(obs, &TPosLinear, &design, 300, seed).unwrap().p_value;
            let b = frt_p_value(obs, &transformed, &design, 300, seed).unwrap().p_value;
            assert_eq!(a, b);
        }
    }

    #[test]
    fn degenerate_replicates_never_exceed() {
        // With two units and one treated under Bernoulli(0.5), half the draws
        // are constant and the statistic is undefined there.
        let x = no_x(2);
        let b = bernoulli_design(vec![0.5, 0.5]).unwrap();
        let res = frt_p_value(Observed::new(&[1.0, 0.0], &[1.0, 0.0], &x).unwrap(), &DiffInMeans, &b, 400, 4).unwrap();
        assert!(res.degenerate_replicates > 100);
        assert!(res.replicate_statistics.iter().filter(|t| t.is_finite()).all(|&t| t == 1.0));
        let expected = (1 + (400 - res.degenerate_replicates)) as f64 / 401.0;
        assert_eq!(res.p_value, expected);
    }

    #[test]
    fn undefined_observed_statistic_aborts() {
        let x = no_x(3);
        let b = bernoulli_design(vec![0.5; 3]).unwrap();
        assert!(matches!(
            frt_p_value(Observed::new(&[1.0, 2.0, 3.0], &[1.0; 3], &x).unwrap(), &DiffInMeans, &b, 10, 0),
            Err(Error::DegenerateGroups)
        ));
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn identical_across_thread_counts() {
        let n = 60;
        let mut s = RngStream::new(22, 0);
        let x = DMatrix::from_fn(n, 2, |_, _| s.standard_normal());
        let y: Vec<f64> = (0..n).map(|i| x[(i, 1)] + s.standard_normal()).collect();
        let w: Vec<f64> = (0..n).map(|_| if s.uniform() < 0.3 { 1.0 } else { 0.0 }).collect();
        let design = bernoulli_design(vec![0.3; n]).unwrap();
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| frt_p_value(Observed::new(&y, &w, &x).unwrap(), &TPosLinear, &design, 500, 9).unwrap())
        };
        let one = run(1);
        let many = run(4);
        assert_eq!(one.p_value, many.p_value);
        assert!(one.replicate_statistics.iter().zip(&many.replicate_statistics).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
