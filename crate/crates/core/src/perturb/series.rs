use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freq::FrequencyBasis;
use crate::phase::{centered_cycle_fraction, turn_sin_cos};

/// One stage of the perturbation `Delta_j sin(alpha_j t)` with
/// `alpha_j = multiple * 2*pi / b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub amplitude: f64,
    pub multiple: f64,
    pub threshold: f64,
    pub tau0: f64,
}

/// `g(t) = sum_j Delta_j sin(alpha_j t)`, a `b`-periodic perturbation.
///
/// Frequencies are stored as integer multiples of `2*pi/b` so that phases can
/// be reduced exactly however large `alpha_j` grows.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSeries {
    b: f64,
    budget: f64,
    stages: Vec<Stage>,
    lattice: Option<(Arc<FrequencyBasis>, Vec<i64>)>,
}

/// Flat JSON form of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub b: f64,
    #[serde(rename = "J")]
    pub depth: usize,
    #[serde(rename = "Delta")]
    pub amplitudes: Vec<f64>,
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
    pub tau0: Vec<f64>,
}

impl PerturbationSeries {
    /// `lattice` optionally names the frequency `2*pi/b` as an integer vector
    /// over a basis, which lets the series report its frequency module.
    pub fn new(
        b: f64,
        budget: f64,
        stages: Vec<Stage>,
        lattice: Option<(Arc<FrequencyBasis>, Vec<i64>)>,
    ) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::invalid("period b must be positive and finite"));
        }
        if stages.is_empty() {
            return Err(Error::invalid("a series needs at least one stage"));
        }
        for (j, s) in stages.iter().enumerate() {
            let ok = s.amplitude.is_finite()
                && s.amplitude >= 0.0
                && s.multiple.is_finite()
                && s.multiple >= 1.0
                && s.multiple.fract() == 0.0;
            if !ok {
                return Err(Error::invalid(format!("stage {j} has an invalid amplitude or multiple")));
            }
        }
        if let Some((basis, g)) = &lattice {
            basis.check(g)?;
        }
        Ok(PerturbationSeries { b, budget, stages, lattice })
    }

    /// A single term `amplitude * sin(alpha t)` for an arbitrary real `alpha`.
    pub fn single(amplitude: f64, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::invalid("frequency must be positive and finite"));
        }
        let stage = Stage { amplitude, multiple: 1.0, threshold: 0.0, tau0: PI / alpha };
        Self::new(TAU / alpha, amplitude, vec![stage], None)
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Index of the last stage.
    pub fn depth(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn lattice(&self) -> Option<&(Arc<FrequencyBasis>, Vec<i64>)> {
        self.lattice.as_ref()
    }

    pub fn alpha(&self, j: usize) -> f64 {
        self.stages[j].multiple * (TAU / self.b)
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.amplitude).collect()
    }

    pub fn alphas(&self) -> Vec<f64> {
        (0..self.stages.len()).map(|j| self.alpha(j)).collect()
    }

    /// The first `count` stages.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        let count = count.min(self.stages.len());
        Self::new(self.b, self.budget, self.stages[..count].to_vec(), self.lattice.clone())
    }

    pub fn sup_bound(&self) -> f64 {
        self.stages.iter().map(|s| s.amplitude).sum()
    }

    pub fn lipschitz_bound(&self) -> f64 {
        (0..self.stages.len()).map(|j| self.stages[j].amplitude * self.alpha(j)).sum()
    }

    pub fn value(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.stages {
            let (sn, _) = turn_sin_cos(centered_cycle_fraction(s.multiple, t, self.b));
            acc += s.amplitude * sn;
        }
        acc
    }

    /// Largest `|g(t + b) - g(t)|` over `t = -u b` for the given `u` in
    /// `[0, 1)`, each snapped to a multiple of the last bit of `b` so that
    /// `t + b` is computed exactly.
    pub fn period_drift(&self, fractions: &[f64]) -> f64 {
        let q = f64::from_bits(self.b.to_bits() & 0x7ff0_0000_0000_0000) * f64::EPSILON;
        let mut worst = 0.0f64;
        for &u in fractions {
            let t = (-u * self.b / q).round() * q;
            let s = t + self.b;
            debug_assert_eq!(s - self.b, t);
            worst = worst.max((self.value(s) - self.value(t)).abs());
        }
        worst
    }

    /// Adds `g(t0 + k*step)` to `out[k]`. Each term is seeded with an exact
    /// phase and advanced by an exactly reduced rotation.
    pub(crate) fn add_span(&self, t0: f64, step: f64, out: &mut [f64]) {
        if out.len() == 1 {
            out[0] += self.value(t0);
            return;
        }
        for s in &self.stages {
            let (mut zi, mut zr) = turn_sin_cos(centered_cycle_fraction(s.multiple, t0, self.b));
            let (wi, wr) = turn_sin_cos(centered_cycle_fraction(s.multiple, step, self.b));
            for o in out.iter_mut() {
                *o += s.amplitude * zi;
                let nr = zr * wr - zi * wi;
                zi = zr * wi + zi * wr;
                zr = nr;
            }
        }
    }

    /// Adds values to `val` and `g(t + tau) - g(t)` to `delta`.
    pub(crate) fn add_span_delta(&self, t0: f64, step: f64, tau: f64, val: &mut [f64], delta: &mut [f64]) {
        for s in &self.stages {
            let (mut zi, mut zr) = turn_sin_cos(centered_cycle_fraction(s.multiple, t0, self.b));
            let (wi, wr) = turn_sin_cos(centered_cycle_fraction(s.multiple, step, self.b));
            // e^{i a tau} - 1 = 2i sin(x) e^{i x}, x = a tau / 2
            let x = PI * centered_cycle_fraction(s.multiple, tau, self.b);
            let (sx, cx) = x.sin_cos();
            let (fr, fi) = (-2.0 * sx * sx, 2.0 * sx * cx);
            for k in 0..val.len() {
                val[k] += s.amplitude * zi;
                delta[k] += s.amplitude * (zr * fi + zi * fr);
                let nr = zr * wr - zi * wi;
                zi = zr * wi + zi * wr;
                zr = nr;
            }
        }
    }

    pub fn to_record(&self) -> SeriesRecord {
        SeriesRecord {
            b: self.b,
            depth: self.depth(),
            amplitudes: self.amplitudes(),
            alpha: self.alphas(),
            delta: self.stages.iter().map(|s| s.threshold).collect(),
            tau0: self.stages.iter().map(|s| s.tau0).collect(),
        }
    }

    /// Rebuilds a series from its record. Multiples are recovered by rounding
    /// `alpha * b / (2*pi)`, which is exact for `alpha` below about `2^52`
    /// times the lattice step.
    pub fn from_record(rec: &SeriesRecord) -> Result<Self> {
        let n = rec.amplitudes.len();
        if n == 0 || rec.alpha.len() != n || rec.delta.len() != n || rec.tau0.len() != n || rec.depth + 1 != n {
            return Err(Error::invalid("series record arrays must all have length J + 1"));
        }
        let step = TAU / rec.b;
        let stages = (0..n)
            .map(|j| Stage {
                amplitude: rec.amplitudes[j],
                multiple: (rec.alpha[j] / step).round().max(1.0),
                threshold: rec.delta[j],
                tau0: rec.tau0[j],
            })
            .collect();
        let budget = rec.amplitudes.iter().sum::<f64>();
        Self::new(rec.b, budget, stages, None)
    }

    pub fn with_lattice(mut self, basis: Arc<FrequencyBasis>, generator: Vec<i64>) -> Result<Self> {
        basis.check(&generator)?;
        self.lattice = Some((basis, generator));
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series() -> PerturbationSeries {
        let stages = vec![
            Stage { amplitude: 0.15, multiple: 7.0, threshold: 1e-3, tau0: 0.4 },
            Stage { amplitude: 1e-4, multiple: 3.0e15, threshold: 1e-7, tau0: 1e-15 },
        ];
        PerturbationSeries::new(TAU, 0.3, stages, None).unwrap()
    }

    #[test]
    fn value_matches_direct_sine_for_moderate_frequency() {
        let s = PerturbationSeries::new(TAU, 1.0, vec![Stage { amplitude: 0.5, multiple: 3.0, threshold: 0.0, tau0: 1.0 }], None)
            .unwrap();
        for &t in &[0.0, 0.3, -2.5, 17.25] {
            assert!((s.value(t) - 0.5 * (3.0 * t).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn span_agrees_with_pointwise() {
        let s = series();
        let step = 1.0 / 1024.0;
        let t0 = -3.0 + 0.5 * step;
        let mut out = vec![0.0; 256];
        s.add_span(t0, step, &mut out);
        for (k, v) in out.iter().enumerate() {
            let t = t0 + k as f64 * step;
            assert!((v - s.value(t)).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn delta_agrees_with_difference_at_lattice_shift() {
        let s = series();
        let mut val = vec![0.0; 4];
        let mut delta = vec![0.0; 4];
        s.add_span_delta(0.25, 0.5, 1.0, &mut val, &mut delta);
        for k in 0..4 {
            let t = 0.25 + 0.5 * k as f64;
            assert!((delta[k] - (s.value(t + 1.0) - s.value(t))).abs() < 1e-13);
        }
    }

    #[test]
    fn period_b_is_exact() {
        let s = series();
        for &t in &[0.125, 1.5, -7.75] {
            assert!((s.value(t + TAU) - s.value(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn record_round_trip() {
        let s = series();
        let rec = s.to_record();
        assert_eq!(rec.depth, 1);
        let back = PerturbationSeries::from_record(&rec).unwrap();
        assert_eq!(back.stages()[0].multiple, 7.0);
        assert_eq!(back.stages()[1].multiple, 3.0e15);
    }

    #[test]
    fn invalid_inputs() {
        assert!(PerturbationSeries::new(0.0, 1.0, vec![], None).is_err());
        assert!(PerturbationSeries::single(1.0, -1.0).is_err());
    }
}
