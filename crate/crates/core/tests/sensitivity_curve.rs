mod common;

use common::effect_world;
use frt_core::assignment::{
    fit_lottery_model, fit_null_outcome_model, lottery_sampler, sensitivity_sampler, AssignmentSampler,
};
use frt_core::harness::consistency::SensitivityStudy;
use frt_core::sensitivity::{build_sensitivity_curve, nw_smooth, CurveSettings};
use frt_core::statistics::{FnStatistic, TPosLinear};
use frt_core::stats::RngStream;
use nalgebra::DMatrix;

fn settings(m: usize) -> CurveSettings {
    CurveSettings {
        grid_points: m,
        ..CurveSettings::default()
    }
}

#[test]
fn constant_statistic_gives_all_ones() {
    let data = effect_world(200, 1, 0.0).sample(1).unwrap();
    let model = fit_lottery_model(&data).unwrap();
    let om = fit_null_outcome_model(&data, 0).unwrap();
    let stat = FnStatistic::new("const", |_: &[f64], _: &[f64], _: &DMatrix<f64>| Ok(2.0));
    let curve = build_sensitivity_curve(&data, 0, &stat, &model, &om, &settings(300), 4).unwrap();
    assert!(curve.indicators.iter().all(|&v| v == 1));
    assert_eq!(nw_smooth(&curve, 0.1).unwrap(), 1.0);
}

#[test]
fn observed_sentinel_dominated_by_every_replicate() {
    let data = effect_world(200, 1, 0.0).sample(2).unwrap();
    let model = fit_lottery_model(&data).unwrap();
    let om = fit_null_outcome_model(&data, 0).unwrap();
    let observed = data.treatment().to_vec();
    let stat = FnStatistic::new("sentinel", move |_: &[f64], w: &[f64], _: &DMatrix<f64>| {
        Ok(if w == observed.as_slice() { f64::NEG_INFINITY } else { w.iter().sum() })
    });
    let curve = build_sensitivity_curve(&data, 0, &stat, &model, &om, &settings(300), 4).unwrap();
    assert!(curve.indicators.iter().all(|&v| v == 1));
    assert_eq!(curve.degenerate_points, 0);
}

#[test]
fn degenerate_replicates_count_as_exceedances() {
    let data = effect_world(200, 1, 0.0).sample(3).unwrap();
    let model = fit_lottery_model(&data).unwrap();
    let om = fit_null_outcome_model(&data, 0).unwrap();
    let observed = data.treatment().to_vec();
    let stat = FnStatistic::new("fails", move |_: &[f64], w: &[f64], _: &DMatrix<f64>| {
        if w == observed.as_slice() {
            Ok(1e9)
        } else {
            Err(frt_core::Error::Singular)
        }
    });
    let curve = build_sensitivity_curve(&data, 0, &stat, &model, &om, &settings(150), 4).unwrap();
    assert!(curve.indicators.iter().all(|&v| v == 1));
    assert_eq!(curve.degenerate_points, 150);
}

#[test]
fn zero_zeta_reproduces_plain_lottery_sampler() {
    let data = effect_world(300, 1, 0.1).sample(4).unwrap();
    let model = fit_lottery_model(&data).unwrap();
    let om = fit_null_outcome_model(&data, 0).unwrap();
    let plain = lottery_sampler(&model, data.covariates()).unwrap();
    let sens = sensitivity_sampler(&model, &om, &data, 0.0).unwrap();
    for r in 0..20 {
        assert_eq!(plain.sample(&mut RngStream::new(9, r)), sens.sample(&mut RngStream::new(9, r)));
    }
}

#[test]
fn curve_near_zero_matches_dense_monte_carlo() {
    let data = effect_world(1000, 1, 0.1).sample(5).unwrap();
    let study = SensitivityStudy {
        data: &data,
        year: 0,
        statistic: &TPosLinear,
    };
    let curve = study.curve(&settings(4000), 11).unwrap();
    let dense = study.dense_p_value(0.0, 2000, 12).unwrap();
    let near: Vec<f64> = curve
        .grid
        .iter()
        .zip(&curve.indicators)
        .filter(|(z, _)| z.abs() <= 0.02)
        .map(|(_, &y)| y as f64)
        .collect();
    let mean = near.iter().sum::<f64>() / near.len() as f64;
    assert!((mean - dense).abs() <= 0.05, "neighbourhood mean {mean}, dense {dense}");
}

#[test]
fn curve_is_reproducible_given_seed() {
    let data = effect_world(300, 1, 0.05).sample(6).unwrap();
    let model = fit_lottery_model(&data).unwrap();
    let om = fit_null_outcome_model(&data, 0).unwrap();
    let a = build_sensitivity_curve(&data, 0, &TPosLinear, &model, &om, &settings(500), 1).unwrap();
    let b = build_sensitivity_curve(&data, 0, &TPosLinear, &model, &om, &settings(500), 1).unwrap();
    let c = build_sensitivity_curve(&data, 0, &TPosLinear, &model, &om, &settings(500), 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.indicators, c.indicators);
}

#[test]
fn mismatched_outcome_model_year_rejected() {
    let data = effect_world(200, 2, 0.0).sample(7).unwrap();
    let model = fit_lottery_model(&data).unwrap();
    let om = fit_null_outcome_model(&data, 1).unwrap();
    assert!(build_sensitivity_curve(&data, 0, &TPosLinear, &model, &om, &settings(200), 1).is_err());
}
