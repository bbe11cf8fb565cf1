//! p-value curves over the sensitivity parameter ζ.
//!
//! One replicate assignment is drawn at each point of an equally spaced ζ
//! grid and compared with the observed statistic; the resulting 0/1
//! indicators are smoothed with a Nadaraya-Watson estimator
//!
//! ```text
//! p̃(ζ) = Σ y_m K_h(ζ − ζ_m) / Σ K_h(ζ − ζ_m)
//! ```
//!
//! Evaluation is restricted to `[lo + h, hi − h]`; there is no boundary
//! correction.

use crate::assignment::{
    sensitivity_sampler, AssignmentSampler, Dataset, FittedLotteryModel, LotterySampler, NullOutcomeModel,
};
use crate::frt::replicate_statistic;
use crate::par;
use crate::statistics::TestStatistic;
use crate::stats::RngStream;
use crate::{Error, Result};

/// Step of the |ζ| mesh scanned by [`minimal_overturn`].
pub const OVERTURN_MESH_STEP: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    /// `0.75 (1 − u²)` on `|u| < 1`.
    Epanechnikov,
    /// `0.5` on `|u| ≤ 1`.
    Box,
}

impl Kernel {
    pub fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov if u.abs() < 1.0 => 0.75 * (1.0 - u * u),
            Kernel::Box if u.abs() <= 1.0 => 0.5,
            _ => 0.0,
        }
    }
}

/// Grid and kernel settings for [`build_sensitivity_curve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSettings {
    pub grid_points: usize,
    pub lo: f64,
    pub hi: f64,
    /// `None` selects `(hi − lo) · M^(−1/3)`.
    pub bandwidth: Option<f64>,
    pub kernel: Kernel,
}

impl Default for CurveSettings {
    fn default() -> Self {
        Self {
            grid_points: 4000,
            lo: -0.99,
            hi: 0.99,
            bandwidth: None,
            kernel: Kernel::Epanechnikov,
        }
    }
}

impl CurveSettings {
    pub fn resolved_bandwidth(&self) -> f64 {
        self.bandwidth
            .unwrap_or_else(|| (self.hi - self.lo) * (self.grid_points as f64).powf(-1.0 / 3.0))
    }

    pub fn grid(&self) -> Vec<f64> {
        let m = self.grid_points;
        let step = (self.hi - self.lo) / (m - 1) as f64;
        (0..m)
            .map(|i| if i + 1 == m { self.hi } else { self.lo + i as f64 * step })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 100 {
            return Err(Error::Domain(format!("need at least 100 grid points, got {}", self.grid_points)));
        }
        if !(self.lo > -1.0 && self.lo < 0.0 && self.hi > 0.0 && self.hi < 1.0) {
            return Err(Error::Domain(format!(
                "zeta range ({}, {}) must satisfy -1 < lo < 0 < hi < 1",
                self.lo, self.hi
            )));
        }
        let h = self.resolved_bandwidth();
        if !(h > 0.0) {
            return Err(Error::Domain(format!("bandwidth {h} must be positive")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityCurve {
    pub grid: Vec<f64>,
    pub indicators: Vec<u8>,
    pub bandwidth: f64,
    pub kernel: Kernel,
    pub year: usize,
    /// Grid points whose replicate statistic was undefined (counted as 1).
    pub degenerate_points: usize,
}

impl SensitivityCurve {
    pub fn new(grid: Vec<f64>, indicators: Vec<u8>, bandwidth: f64, kernel: Kernel, year: usize) -> Result<Self> {
        if grid.len() < 2 || grid.len() != indicators.len() {
            return Err(Error::Shape(format!("{} grid points, {} indicators", grid.len(), indicators.len())));
        }
        let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
        let even = grid.windows(2).all(|w| w[1] > w[0] && ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
        if !even {
            return Err(Error::Domain("grid must be strictly increasing and equally spaced".into()));
        }
        if indicators.iter().any(|&v| v > 1) {
            return Err(Error::Domain("indicators must be 0 or 1".into()));
        }
        if !(bandwidth > 0.0) {
            return Err(Error::Domain(format!("bandwidth {bandwidth} must be positive")));
        }
        Ok(Self {
            grid,
            indicators,
            bandwidth,
            kernel,
            year,
            degenerate_points: 0,
        })
    }

    /// `[lo + h, hi − h]`.
    pub fn interior(&self) -> (f64, f64) {
        (self.grid[0] + self.bandwidth, self.grid[self.grid.len() - 1] - self.bandwidth)
    }

    pub fn in_interior(&self, at: f64) -> bool {
        let (a, b) = self.interior();
        at >= a && at <= b
    }

    pub fn mean_indicator(&self) -> f64 {
        self.indicators.iter().map(|&v| v as f64).sum::<f64>() / self.indicators.len() as f64
    }

    fn weighted_mean(&self, at: f64) -> Result<f64> {
        let lo = self.grid[0];
        let step = (self.grid[self.grid.len() - 1] - lo) / (self.grid.len() - 1) as f64;
        let first = (((at - self.bandwidth - lo) / step).floor() as isize - 1).max(0) as usize;
        let last = ((((at + self.bandwidth - lo) / step).ceil() as isize + 1).max(0) as usize).min(self.grid.len() - 1);
        let (mut num, mut den) = (0.0, 0.0);
        for m in first..=last {
            let k = self.kernel.weight((at - self.grid[m]) / self.bandwidth);
            num += k * self.indicators[m] as f64;
            den += k;
        }
        if den == 0.0 {
            return Err(Error::UndefinedWindow(at));
        }
        Ok(num / den)
    }
}

/// Nadaraya-Watson estimate of the p-value function at `at`.
pub fn nw_smooth(curve: &SensitivityCurve, at: f64) -> Result<f64> {
    if !curve.in_interior(at) {
        let (a, b) = curve.interior();
        return Err(Error::Domain(format!("zeta {at} outside the smoothing interior [{a}, {b}]")));
    }
    curve.weighted_mean(at)
}

/// Draws one replicate per grid point and records `1{T_rep ≥ T_obs}`.
///
/// Grid point `m` uses stream `(seed, m)`. Undefined replicate statistics
/// are recorded as 1.
pub fn build_sensitivity_curve(
    data: &Dataset,
    year: usize,
    statistic: &dyn TestStatistic,
    lottery_model: &FittedLotteryModel,
    null_outcome_model: &NullOutcomeModel,
    settings: &CurveSettings,
    seed: u64,
) -> Result<SensitivityCurve> {
    settings.validate()?;
    if null_outcome_model.year != year {
        return Err(Error::Domain(format!(
            "outcome model is for year {}, curve for year {year}",
            null_outcome_model.year
        )));
    }
    let y = data.outcome(year)?;
    let base = sensitivity_sampler(lottery_model, null_outcome_model, data, 0.0)?;
    curve_from_sampler(&y, data, statistic, &base, settings, year, seed)
}

pub(crate) fn curve_from_sampler(
    y: &[f64],
    data: &Dataset,
    statistic: &dyn TestStatistic,
    base: &LotterySampler,
    settings: &CurveSettings,
    year: usize,
    seed: u64,
) -> Result<SensitivityCurve> {
    settings.validate()?;
    let grid = settings.grid();
    let bound = statistic.bind(y, data.covariates())?;
    let observed = bound.eval(data.treatment())?;
    let samplers: Vec<LotterySampler> = grid.iter().map(|&z| base.with_zeta(z)).collect::<Result<_>>()?;
    let outcomes = par::map_indices(grid.len(), |m| {
        let w = samplers[m].sample(&mut RngStream::new(seed, m as u64));
        let t = replicate_statistic(bound.as_ref(), &w);
        if t == f64::NEG_INFINITY {
            (1u8, true)
        } else {
            ((t >= observed) as u8, false)
        }
    });
    let mut curve = SensitivityCurve::new(
        grid,
        outcomes.iter().map(|o| o.0).collect(),
        settings.resolved_bandwidth(),
        settings.kernel,
        year,
    )?;
    curve.degenerate_points = outcomes.iter().filter(|o| o.1).count();
    Ok(curve)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverturnResult {
    /// Smallest |ζ| on the mesh with `p̃ ≥ alpha`; `None` if not reached
    /// inside the smoothing interior.
    pub zeta_star_abs: Option<f64>,
    pub alpha: f64,
    pub side: Option<Side>,
    /// `p̃(0) ≥ alpha`, in which case `zeta_star_abs` is 0.
    pub not_significant_at_zero: bool,
}

/// Scans |ζ| outward from 0 in steps of [`OVERTURN_MESH_STEP`] on both
/// sides and reports the first |ζ| where the smoothed p-value reaches `alpha`.
pub fn minimal_overturn(curve: &SensitivityCurve, alpha: f64) -> Result<OverturnResult> {
    let p0 = nw_smooth(curve, 0.0)?;
    if p0 >= alpha {
        return Ok(OverturnResult {
            zeta_star_abs: Some(0.0),
            alpha,
            side: Some(Side::Both),
            not_significant_at_zero: true,
        });
    }
    for k in 1.. {
        let z = k as f64 * OVERTURN_MESH_STEP;
        let pos = curve.in_interior(z);
        let neg = curve.in_interior(-z);
        if !pos && !neg {
            break;
        }
        let hit_pos = pos && nw_smooth(curve, z)? >= alpha;
        let hit_neg = neg && nw_smooth(curve, -z)? >= alpha;
        let side = match (hit_pos, hit_neg) {
            (true, true) => Side::Both,
            (true, false) => Side::Positive,
            (false, true) => Side::Negative,
            (false, false) => continue,
        };
        return Ok(OverturnResult {
            zeta_star_abs: Some(z),
            alpha,
            side: Some(side),
            not_significant_at_zero: false,
        });
    }
    Ok(OverturnResult {
        zeta_star_abs: None,
        alpha,
        side: None,
        not_significant_at_zero: false,
    })
}
