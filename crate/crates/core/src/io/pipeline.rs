use std::fmt::Write as _;
use std::path::Path;

use super::config::AnalysisConfig;
use super::ingest::{ingest_csv, Ingested};
use crate::assignment::{fit_lottery_model, fit_null_outcome_model, lottery_sampler, Dataset, FittedLotteryModel};
use crate::frt::{frt_p_value, Observed};
use crate::harness::{run_suite, Suite, SuiteOptions, SuiteReport};
use crate::sensitivity::{build_sensitivity_curve, minimal_overturn, nw_smooth, OverturnResult, SensitivityCurve, Side};
use crate::statistics::TPosLinear;
use crate::stats::derive_seed;
use crate::{par, Error, Result};

const SENSITIVITY_SEED_TAG: u64 = 0x5E45_0001;

#[derive(Clone, Debug, PartialEq)]
pub struct YearTest {
    pub year: usize,
    pub p_value: f64,
    pub observed_statistic: f64,
    pub draws: usize,
    pub degenerate_replicates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct YearSensitivity {
    pub year: usize,
    pub curve: SensitivityCurve,
    pub overturn: OverturnResult,
}

/// Everything `test` and `sensitivity` produce; either part may be empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultsBundle {
    pub tests: Vec<YearTest>,
    pub sensitivity: Vec<YearSensitivity>,
    /// `(key, value)` pairs written to `diagnostics.csv`.
    pub diagnostics: Vec<(String, String)>,
}

fn model_diagnostics(ingested: &Ingested, model: &FittedLotteryModel) -> Vec<(String, String)> {
    let fit = &model.probit_part;
    vec![
        ("rows_read".into(), ingested.total_rows.to_string()),
        ("rows_dropped".into(), ingested.dropped_rows.to_string()),
        ("units".into(), ingested.data.n_units().to_string()),
        ("winners".into(), model.n_winners.to_string()),
        ("probit_iterations".into(), fit.iterations.to_string()),
        ("probit_log_likelihood".into(), fit.log_likelihood.to_string()),
        ("log_prize_sigma".into(), model.log_prize_sigma.to_string()),
    ]
}

/// Fisher p-value of `T_pos` for every year, with the lottery model fitted once.
/// Year `j` uses seed `derive_seed(seed, j)`.
pub fn run_test(data: &Dataset, model: &FittedLotteryModel, config: &AnalysisConfig) -> Result<Vec<YearTest>> {
    let sampler = lottery_sampler(model, data.covariates())?;
    par::try_map_indices(data.n_years(), |year| {
        let y = data.outcome(year)?;
        let obs = Observed::new(&y, data.treatment(), data.covariates())?;
        let res = frt_p_value(obs, &TPosLinear, &sampler, config.draws, derive_seed(config.seed, year as u64))
            .map_err(|e| e.in_year(year))?;
        Ok(YearTest {
            year,
            p_value: res.p_value,
            observed_statistic: res.observed_statistic,
            draws: res.draws,
            degenerate_replicates: res.degenerate_replicates,
        })
    })
}

/// Sensitivity curve and minimal overturning `|ζ|` for every year.
pub fn run_sensitivity(
    data: &Dataset,
    model: &FittedLotteryModel,
    config: &AnalysisConfig,
) -> Result<Vec<YearSensitivity>> {
    let settings = config.curve_settings();
    let base = derive_seed(config.seed, SENSITIVITY_SEED_TAG);
    par::try_map_indices(data.n_years(), |year| {
        let inner = || -> Result<YearSensitivity> {
            let outcome_model = fit_null_outcome_model(data, year)?;
            let curve = build_sensitivity_curve(
                data,
                year,
                &TPosLinear,
                model,
                &outcome_model,
                &settings,
                derive_seed(base, year as u64),
            )?;
            let overturn = minimal_overturn(&curve, config.alpha)?;
            Ok(YearSensitivity { year, curve, overturn })
        };
        inner().map_err(|e| e.in_year(year))
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn pvalues_csv(tests: &[YearTest]) -> String {
    let mut s = String::from("year,p_value,T_obs,R\n");
    for t in tests {
        let _ = writeln!(s, "{},{},{},{}", t.year, t.p_value, t.observed_statistic, t.draws);
    }
    s
}

/// `zeta,indicator,smoothed_p`, with `smoothed_p` left blank outside the
/// smoothing interior.
pub fn curve_csv(curve: &SensitivityCurve) -> Result<String> {
    let mut s = String::from("zeta,indicator,smoothed_p\n");
    for (&z, &ind) in curve.grid.iter().zip(&curve.indicators) {
        if curve.in_interior(z) {
            let _ = writeln!(s, "{z},{ind},{}", nw_smooth(curve, z)?);
        } else {
            let _ = writeln!(s, "{z},{ind},");
        }
    }
    Ok(s)
}

fn overturn_flag(o: &OverturnResult) -> &'static str {
    if o.not_significant_at_zero {
        return "not_significant_at_zero";
    }
    match o.side {
        Some(Side::Positive) => "positive",
        Some(Side::Negative) => "negative",
        Some(Side::Both) => "both",
        None => "no_crossing",
    }
}

pub fn zeta_star_csv(results: &[YearSensitivity]) -> String {
    let mut s = String::from("year,zeta_star_abs,flag\n");
    for r in results {
        let z = r.overturn.zeta_star_abs.map(|z| z.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{z},{}", r.year, overturn_flag(&r.overturn));
    }
    s
}

fn diagnostics_csv(rows: &[(String, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

fn load(config: &AnalysisConfig) -> Result<(Ingested, FittedLotteryModel)> {
    let ingested = ingest_csv(&config.dataset, config)?;
    let model = fit_lottery_model(&ingested.data)?;
    Ok((ingested, model))
}

/// `test`: writes `pvalues.csv` and `diagnostics.csv` into `out`.
pub fn test_command(config: &AnalysisConfig, out: &Path) -> Result<ResultsBundle> {
    let (ingested, model) = load(config)?;
    let tests = run_test(&ingested.data, &model, config)?;
    let mut diagnostics = model_diagnostics(&ingested, &model);
    for t in &tests {
        diagnostics.push((format!("degenerate_replicates_year{}", t.year), t.degenerate_replicates.to_string()));
    }
    create_dir(out)?;
    write_file(&out.join("pvalues.csv"), &pvalues_csv(&tests))?;
    write_file(&out.join("diagnostics.csv"), &diagnostics_csv(&diagnostics))?;
    Ok(ResultsBundle {
        tests,
        sensitivity: Vec::new(),
        diagnostics,
    })
}

/// `sensitivity`: writes `curve_year<j>.csv`, `zeta_star.csv` and
/// `sensitivity_diagnostics.csv` into `out`.
pub fn sensitivity_command(config: &AnalysisConfig, out: &Path) -> Result<ResultsBundle> {
    let (ingested, model) = load(config)?;
    let sensitivity = run_sensitivity(&ingested.data, &model, config)?;
    let mut diagnostics = model_diagnostics(&ingested, &model);
    for r in &sensitivity {
        diagnostics.push((format!("bandwidth_year{}", r.year), r.curve.bandwidth.to_string()));
        diagnostics.push((
            format!("degenerate_grid_points_year{}", r.year),
            r.curve.degenerate_points.to_string(),
        ));
    }
    create_dir(out)?;
    for r in &sensitivity {
        write_file(&out.join(format!("curve_year{}.csv", r.year)), &curve_csv(&r.curve)?)?;
    }
    write_file(&out.join("zeta_star.csv"), &zeta_star_csv(&sensitivity))?;
    write_file(&out.join("sensitivity_diagnostics.csv"), &diagnostics_csv(&diagnostics))?;
    Ok(ResultsBundle {
        tests: Vec::new(),
        sensitivity,
        diagnostics,
    })
}

/// `simulate` / `check`: runs a harness suite and writes `report_<suite>.csv`.
pub fn suite_command(suite: &str, opts: &SuiteOptions, out: &Path) -> Result<SuiteReport> {
    let suite: Suite = suite.parse()?;
    let report = run_suite(suite, opts)?;
    create_dir(out)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    let path = out.join(format!("report_{suite}.csv"));
    std::fs::write(&path, buf).map_err(|e| Error::io(path, e))?;
    Ok(report)
}
