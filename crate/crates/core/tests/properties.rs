use frt_core::assignment::{bernoulli_design, complete_randomization, AssignmentSampler};
use frt_core::frt::{add_one_p_value, build_decision_rule, frt_p_value, frt_p_value_exact, ExactDistribution, Observed};
use frt_core::sensitivity::{nw_smooth, Kernel, SensitivityCurve};
use frt_core::statistics::{DiffInMeans, FnStatistic, TestStatistic};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn add_one_p_value_bounds(obs in -3.0f64..3.0, reps in prop::collection::vec(-3.0f64..3.0, 1..200)) {
        let p = add_one_p_value(obs, &reps);
        let r = reps.len() as f64;
        let plain = reps.iter().filter(|&&t| t >= obs).count() as f64 / r;
        prop_assert!(p >= 1.0 / (r + 1.0) && p <= 1.0);
        // Never below the plug-in exceedance fraction.
        prop_assert!(p >= plain);
    }

    #[test]
    fn exact_p_value_includes_observed(y in prop::collection::vec(-2.0f64..2.0, 6), w_code in 0usize..20) {
        let design = complete_randomization(6, 3).unwrap();
        let w = design.enumerate_all().unwrap()[w_code].treatment.clone();
        let x = DMatrix::zeros(6, 0);
        let p = frt_p_value_exact(Observed::new(&y, &w, &x).unwrap(), &DiffInMeans, &design).unwrap();
        prop_assert!((1.0 / 20.0 - 1e-15..=1.0 + 1e-15).contains(&p));
    }

    #[test]
    fn decision_rule_has_exact_level(y in prop::collection::vec(-2.0f64..2.0, 6), alpha in 0.01f64..0.99) {
        let design = complete_randomization(6, 3).unwrap();
        let x = DMatrix::zeros(6, 0);
        let rule = build_decision_rule(&y, &x, &DiffInMeans, &design, alpha).unwrap();
        prop_assert!((rule.exact_level() - alpha).abs() < 1e-12);
    }

    #[test]
    fn monotone_transform_preserves_p_values(
        y in prop::collection::vec(-2.0f64..2.0, 8),
        w in prop::collection::vec(0u8..2, 8),
        seed in 0u64..1000,
    ) {
        let w: Vec<f64> = w.into_iter().map(f64::from).collect();
        prop_assume!(w.contains(&1.0) && w.contains(&0.0));
        let design = bernoulli_design(vec![0.5; 8]).unwrap();
        let x = DMatrix::zeros(8, 0);
        let obs = Observed::new(&y, &w, &x).unwrap();
        let cubed = FnStatistic::new("cubed", |y: &[f64], w: &[f64], x: &DMatrix<f64>| {
            DiffInMeans.evaluate(y, w, x).map(|t| t * t * t + 2.0)
        });
        let a = frt_p_value(obs, &DiffInMeans, &design, 99, seed).unwrap();
        let b = frt_p_value(obs, &cubed, &design, 99, seed).unwrap();
        prop_assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn smoothed_values_are_probabilities(
        bits in prop::collection::vec(0u8..2, 200),
        h in 0.05f64..0.4,
        at in -0.5f64..0.5,
    ) {
        let grid: Vec<f64> = (0..200).map(|i| -0.99 + 1.98 * i as f64 / 199.0).collect();
        let curve = SensitivityCurve::new(grid, bits, h, Kernel::Epanechnikov, 0).unwrap();
        prop_assume!(curve.in_interior(at));
        let p = nw_smooth(&curve, at).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn exact_distribution_is_a_distribution() {
    let design = complete_randomization(6, 2).unwrap();
    let assignments = design.enumerate_all().unwrap();
    let y = [0.3, -1.2, 0.8, 0.1, 2.0, -0.4];
    let x = DMatrix::zeros(6, 0);
    let bound = DiffInMeans.bind(&y, &x).unwrap();
    let dist = ExactDistribution::new(bound.as_ref(), &assignments);
    let atoms = dist.p_value_atoms();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(atoms.windows(2).all(|w| w[0].0 < w[1].0));
    assert!((atoms.last().unwrap().0 - 1.0).abs() < 1e-12);
}
