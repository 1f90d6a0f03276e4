//! Long-horizon averages and the distances built on them.
//!
//! Every limit `lim sup_{b -> inf} (1/2b) int_{-b}^{b}` is estimated on a
//! finite list of horizons: midpoint sums on a shared grid give one average
//! per horizon, and the reported value is the maximum over the last `window`
//! horizons.

mod almost;
mod density;
mod distance;
mod fourier;
mod hausdorff;
pub(crate) mod quadrature;

use serde::{Deserialize, Serialize};

pub use almost::{almost_periods, AlmostPeriodMetric, AlmostPeriods};
pub use density::{density, DensityMode};
pub use distance::{
    besicovitch_distance, capped_shift_distance, stepanov_distance, sup_distance, time_average, SupEstimate,
    WindowEstimate,
};
pub use fourier::{fourier_bohr, fourier_bohr_many, FourierBohr};
pub use hausdorff::dist_hausdorff;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingScheme {
    b_list: Vec<f64>,
    step: f64,
    window: usize,
}

impl AveragingScheme {
    /// `b_list` strictly increasing and positive, `0 < step <= b_list[0]/100`,
    /// `1 <= window <= b_list.len()`.
    pub fn new(b_list: Vec<f64>, step: f64, window: usize) -> Result<Self> {
        if b_list.is_empty() {
            return Err(Error::InvalidScheme("horizon list is empty".into()));
        }
        if b_list.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::InvalidScheme("horizons must be positive and finite".into()));
        }
        if b_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidScheme("horizons must be strictly increasing".into()));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidScheme("step must be positive".into()));
        }
        if step > b_list[0] / 100.0 {
            return Err(Error::InvalidScheme(format!("step {step} exceeds b_1 / 100 = {}", b_list[0] / 100.0)));
        }
        if window == 0 || window > b_list.len() {
            return Err(Error::InvalidScheme(format!("window must lie in 1..={}", b_list.len())));
        }
        Ok(AveragingScheme { b_list, step, window })
    }

    /// Horizons `b_0 * 2^k` below `b_max`, then `b_max` itself.
    pub fn doubling(b_0: f64, b_max: f64, step: f64, window: usize) -> Result<Self> {
        if !(b_0 > 0.0 && b_max >= b_0) {
            return Err(Error::InvalidScheme("need 0 < b_0 <= b_max".into()));
        }
        let mut b_list = Vec::new();
        let mut b = b_0;
        while b < b_max {
            b_list.push(b);
            b *= 2.0;
        }
        b_list.push(b_max);
        let window = window.min(b_list.len());
        Self::new(b_list, step, window)
    }

    /// Horizons 100, 200, ..., 6400, 10^4 with step 10^-3 and window 3.
    pub fn standard() -> Self {
        Self::doubling(100.0, 1e4, 1e-3, 3).expect("standard scheme is valid")
    }

    pub fn b_list(&self) -> &[f64] {
        &self.b_list
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn b_max(&self) -> f64 {
        *self.b_list.last().expect("non-empty")
    }

    /// The sample spacing actually used: the largest power of two not above
    /// `step`. Dyadic spacing makes every sample time exact in binary, so
    /// shifted and rotated evaluations agree with pointwise ones.
    pub fn grid_step(&self) -> f64 {
        2f64.powi(self.step.log2().floor() as i32)
    }
}

/// Per-horizon averages and the windowed lim sup estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageEstimate {
    pub value: f64,
    /// `(b, average)` pairs; `b` is the horizon rounded up to the grid.
    pub per_horizon: Vec<(f64, f64)>,
    /// `max - min` of the averages in the window.
    pub spread: f64,
}

impl AverageEstimate {
    pub(crate) fn from_averages(horizons: &[f64], averages: &[f64], window: usize) -> Self {
        let per_horizon: Vec<(f64, f64)> = horizons.iter().copied().zip(averages.iter().copied()).collect();
        let tail = &averages[averages.len() - window.min(averages.len())..];
        let value = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let low = tail.iter().copied().fold(f64::INFINITY, f64::min);
        AverageEstimate { value, per_horizon, spread: value - low }
    }

    /// Applies a non-decreasing map to every average.
    pub(crate) fn map(self, f: impl Fn(f64) -> f64, window: usize) -> Self {
        let hs: Vec<f64> = self.per_horizon.iter().map(|p| p.0).collect();
        let avs: Vec<f64> = self.per_horizon.iter().map(|p| f(p.1)).collect();
        Self::from_averages(&hs, &avs, window)
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("exponent p = {p} must be a finite number >= 1")));
    }
    Ok(())
}
