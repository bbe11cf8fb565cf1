#![allow(dead_code)]

use std::path::Path;

use frt_core::assignment::Dataset;
use frt_core::harness::synthetic::LotteryWorld;
use frt_core::io::{dataset_csv, AnalysisConfig};

/// Writes `data` to `dir/data.csv` and returns a config pointing at it.
pub fn write_dataset(dir: &Path, data: &Dataset) -> AnalysisConfig {
    let path = dir.join("data.csv");
    std::fs::write(&path, dataset_csv(data)).unwrap();
    AnalysisConfig::for_columns(path, data.n_years(), data.covariates().ncols())
}

/// Lottery world where the prize raises every year's outcome.
pub fn effect_world(n: usize, years: usize, effect: f64) -> LotteryWorld {
    LotteryWorld::null(n).with_effects(vec![effect; years])
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}
