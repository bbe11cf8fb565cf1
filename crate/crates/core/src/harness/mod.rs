//! Simulation and enumeration suites that check the method's validity,
//! power and consistency claims, each producing a pass/fail report.

pub mod consistency;
pub mod power;
pub mod synthetic;
pub mod theorem1;
pub mod type_i;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::assignment::complete_randomization;
use crate::sensitivity::{nw_smooth, CurveSettings};
use crate::statistics::{BayesSpec, ConjugateBayesFactor, DiffInMeans, TPosLinear};
use crate::stats::derive_seed;
use crate::{Error, Result};

use self::consistency::{bayes_factor_posterior_pairs, sup_norm_difference, SensitivityStudy};
use self::power::{simulate_bayes_power, PowerSimResult};
use self::synthetic::LotteryWorld;
use self::theorem1::theorem1_suite;
use self::type_i::{fitted_lottery_p_value, known_design_p_value, sensitivity_p_value, simulate_type_i};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
    Theorem2,
    Prop1,
    Prop2,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Lemma1,
        Suite::Lemma2,
        Suite::Lemma3,
        Suite::Theorem1,
        Suite::Theorem2,
        Suite::Prop1,
        Suite::Prop2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Lemma3 => "lemma3",
            Suite::Theorem1 => "theorem1",
            Suite::Theorem2 => "theorem2",
            Suite::Prop1 => "prop1",
            Suite::Prop2 => "prop2",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::UnknownSuite(s.to_string()))
    }
}

/// Overrides for a suite run; `None` selects the suite's own default.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    pub alpha: f64,
    /// Monte Carlo draws per FRT (dense draws for `prop2`).
    pub draws: Option<usize>,
    /// Replications, worlds or seeds, depending on the suite.
    pub replications: Option<usize>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 1,
            alpha: 0.05,
            draws: None,
            replications: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub claim: String,
    pub measured: f64,
    pub relation: Relation,
    pub threshold: f64,
}

impl ReportRow {
    pub fn new(claim: impl Into<String>, measured: f64, relation: Relation, threshold: f64) -> Self {
        Self {
            claim: claim.into(),
            measured,
            relation,
            threshold,
        }
    }

    pub fn pass(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.measured <= self.threshold,
            Relation::AtLeast => self.measured >= self.threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub rows: Vec<ReportRow>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(ReportRow::pass)
    }

    /// Comma-separated report with a header row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["suite", "claim", "measured", "relation", "threshold", "pass"])?;
        for r in &self.rows {
            w.write_record([
                self.suite.name(),
                &r.claim,
                &r.measured.to_string(),
                r.relation.symbol(),
                &r.threshold.to_string(),
                &r.pass().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Units in the lottery-world simulations.
pub const LOTTERY_SIM_UNITS: usize = 2000;
/// Units in the sensitivity-curve consistency world.
pub const PROP2_UNITS: usize = 500;
/// `(ζ^W, ζ^Y)` of the confounded simulation worlds.
pub const PLANTED_CONFOUNDING: (f64, f64) = (0.5, 0.8);

pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<SuiteReport> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::Domain(format!("alpha {} outside (0, 1)", opts.alpha)));
    }
    let alpha = opts.alpha;
    let reps = |default: usize| opts.replications.unwrap_or(default);
    let draws = |default: usize| opts.draws.unwrap_or(default);
    let rows = match suite {
        Suite::Lemma1 => {
            let (n, r) = (reps(1000), draws(199));
            let res = simulate_type_i(n, &[alpha], opts.seed, |s| known_design_p_value(50, r, s))?;
            vec![ReportRow::new(
                "rejection rate, known design",
                res.rejection_rates[0],
                Relation::AtMost,
                alpha + 3.0 * res.nominal_se(alpha),
            )]
        }
        Suite::Lemma2 => {
            let (n, r) = (reps(500), draws(199));
            let world = LotteryWorld::null(LOTTERY_SIM_UNITS);
            let res = simulate_type_i(n, &[alpha], opts.seed, |s| fitted_lottery_p_value(&world, r, s))?;
            vec![ReportRow::new(
                "rejection rate, fitted lottery sampler",
                res.rejection_rates[0],
                Relation::AtMost,
                alpha + 0.02,
            )]
        }
        Suite::Lemma3 => {
            let (n, r) = (reps(500), draws(199));
            let (zw, zy) = PLANTED_CONFOUNDING;
            let world = LotteryWorld::null(LOTTERY_SIM_UNITS).with_confounding(zw, zy);
            let res = simulate_type_i(n, &[alpha], opts.seed, |s| sensitivity_p_value(&world, r, s))?;
            vec![ReportRow::new(
                "rejection rate, sensitivity sampler at true zeta",
                res.rejection_rates[0],
                Relation::AtMost,
                alpha + 0.02,
            )]
        }
        Suite::Theorem1 => {
            let worlds = reps(200);
            let s = theorem1_suite(worlds, opts.seed)?;
            vec![
                ReportRow::new(
                    "unconfounded worlds with statement1 = statement2",
                    s.agreeing as f64,
                    Relation::AtLeast,
                    worlds as f64,
                ),
                ReportRow::new(
                    "confounded witnesses with statement1 != statement2",
                    s.witnesses_disagreeing as f64,
                    Relation::AtLeast,
                    1.0,
                ),
            ]
        }
        Suite::Theorem2 => {
            let n = reps(5000);
            let design = complete_randomization(6, 3)?;
            let bf = ConjugateBayesFactor::default();
            let res = simulate_bayes_power(&design, &[&bf, &DiffInMeans], BayesSpec::default(), alpha, n, opts.seed)?;
            theorem2_rows(&res)?
        }
        Suite::Prop1 => {
            let seeds = reps(100);
            let pairs = bayes_factor_posterior_pairs(seeds, 12, draws(199), BayesSpec::default(), opts.seed)?;
            let equal = pairs.iter().filter(|p| p.via_bayes_factor == p.via_posterior).count();
            vec![ReportRow::new(
                "seeds with identical p-values",
                equal as f64,
                Relation::AtLeast,
                seeds as f64,
            )]
        }
        Suite::Prop2 => prop2_rows(opts.seed, draws(2000))?,
    };
    Ok(SuiteReport { suite, rows })
}

fn theorem2_rows(res: &PowerSimResult) -> Result<Vec<ReportRow>> {
    let missing = || Error::Domain("power simulation without alternative draws".into());
    let beta = |name: &str| res.get(name).and_then(|s| s.bayesian_power).ok_or_else(missing);
    let (b_bf, b_dm) = (beta("t_bf_conjugate")?, beta("diff_in_means")?);
    let se = PowerSimResult::rate_se(b_dm, res.alternative_draws);
    let mut rows = vec![ReportRow::new(
        "beta_B(t_bf) - beta_B(diff_in_means)",
        b_bf - b_dm,
        Relation::AtLeast,
        -2.0 * se,
    )];
    let type_i_se = PowerSimResult::rate_se(res.alpha, res.null_draws);
    for s in &res.statistics {
        if let Some(a) = s.bayesian_type_i {
            rows.push(ReportRow::new(
                format!("|alpha_B - alpha| for {}", s.name),
                (a - res.alpha).abs(),
                Relation::AtMost,
                2.0 * type_i_se,
            ));
        }
    }
    Ok(rows)
}

fn prop2_rows(seed: u64, dense_draws: usize) -> Result<Vec<ReportRow>> {
    let (zw, zy) = PLANTED_CONFOUNDING;
    let data = LotteryWorld::null(PROP2_UNITS).with_confounding(zw, zy).sample(seed)?;
    let study = SensitivityStudy {
        data: &data,
        year: 0,
        statistic: &TPosLinear,
    };
    let m = 4000;
    let h = (m as f64).powf(-1.0 / 3.0);
    let coarse = CurveSettings {
        grid_points: m,
        bandwidth: Some(h),
        ..CurveSettings::default()
    };
    let fine = CurveSettings {
        grid_points: 2 * m,
        bandwidth: Some(h / 2.0),
        ..CurveSettings::default()
    };
    let curve = study.curve(&coarse, derive_seed(seed, 1))?;
    let mut rows = Vec::new();
    for z in [-0.5, 0.0, 0.5] {
        let dense = study.dense_p_value(z, dense_draws, derive_seed(seed, 2))?;
        rows.push(ReportRow::new(
            format!("|smoothed - dense MC| at zeta={z}"),
            (nw_smooth(&curve, z)? - dense).abs(),
            Relation::AtMost,
            0.05,
        ));
    }
    let refined = study.curve(&fine, derive_seed(seed, 3))?;
    rows.push(ReportRow::new(
        "sup-norm change, 2M grid and h/2",
        sup_norm_difference(&curve, &refined)?,
        Relation::AtMost,
        0.05,
    ));
    Ok(rows)
}
