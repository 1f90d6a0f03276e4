use serde::{Deserialize, Serialize};

use super::distance::window_max;
use super::quadrature::Grid;
use super::{check_p, AveragingScheme};
use crate::error::{Error, Result};
use crate::expr::{FuncExpr, Span};
use crate::space::norm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlmostPeriodMetric {
    Stepanov { p: f64 },
    Besicovitch { p: f64 },
    Capped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlmostPeriods {
    /// `(tau, distance)` for every scanned shift.
    pub scanned: Vec<(f64, f64)>,
    /// Shifts whose distance is below `eps`.
    pub accepted: Vec<f64>,
    /// Largest gap between consecutive accepted shifts, when at least two
    /// were accepted: every interval of that length in the scanned range
    /// contains an accepted shift.
    pub witness: Option<f64>,
}

/// Scans `tau = k * tau_step` in `(0, tau_max]` and keeps the shifts with
/// `D(f, f(. + tau)) < eps`.
pub fn almost_periods(
    f: &FuncExpr,
    eps: f64,
    metric: AlmostPeriodMetric,
    tau_max: f64,
    tau_step: f64,
    scheme: &AveragingScheme,
) -> Result<AlmostPeriods> {
    if !(eps > 0.0 && tau_step > 0.0 && tau_max >= tau_step && tau_max.is_finite()) {
        return Err(Error::invalid("need eps > 0 and 0 < tau_step <= tau_max"));
    }
    if let AlmostPeriodMetric::Stepanov { p } | AlmostPeriodMetric::Besicovitch { p } = metric {
        check_p(p)?;
    }
    let count = (tau_max / tau_step).floor() as usize;
    let mut scanned = Vec::with_capacity(count);
    let mut accepted = Vec::new();
    for k in 1..=count {
        let tau = k as f64 * tau_step;
        let d = shift_distance(f, tau, metric, scheme)?;
        scanned.push((tau, d));
        if d < eps {
            accepted.push(tau);
        }
    }
    let witness = if accepted.len() >= 2 {
        Some(accepted.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
    } else {
        None
    };
    Ok(AlmostPeriods { scanned, accepted, witness })
}

fn shift_distance(f: &FuncExpr, tau: f64, metric: AlmostPeriodMetric, scheme: &AveragingScheme) -> Result<f64> {
    let d = f.dim();
    let capped = metric == AlmostPeriodMetric::Capped;
    let mut val = Vec::new();
    let mut delta = Vec::new();
    let mut rho = |span: Span, out: &mut [f64]| -> Result<()> {
        val.resize(span.len * d, 0.0);
        delta.resize(span.len * d, 0.0);
        f.eval_span_delta(span, tau, &mut val, &mut delta)?;
        for k in 0..span.len {
            let r = norm(&delta[k * d..(k + 1) * d]);
            out[k] = if capped { r.min(1.0) } else { r };
        }
        Ok(())
    };
    match metric {
        AlmostPeriodMetric::Stepanov { p } => Ok(window_max(scheme, p, rho)?.value),
        AlmostPeriodMetric::Besicovitch { .. } | AlmostPeriodMetric::Capped => {
            let p = if let AlmostPeriodMetric::Besicovitch { p } = metric { p } else { 1.0 };
            let grid = Grid::new(scheme);
            let avs = grid.averages(1, |span, out| {
                rho(span, out)?;
                if p != 1.0 {
                    for v in out.iter_mut() {
                        *v = v.powf(p);
                    }
                }
                Ok(())
            })?;
            let tail = &avs[avs.len() - scheme.window()..];
            let v = tail.iter().map(|a| a[0]).fold(f64::NEG_INFINITY, f64::max);
            Ok(v.powf(1.0 / p))
        }
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;
    use std::sync::Arc;

    use super::*;
    use crate::freq::FrequencyBasis;

    #[test]
    fn constant_accepts_every_shift() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let c = FuncExpr::constant(&b, &[2.0]).unwrap();
        let s = AveragingScheme::new(vec![10.0, 20.0], 1.0 / 16.0, 1).unwrap();
        let r = almost_periods(&c, 0.1, AlmostPeriodMetric::Stepanov { p: 1.0 }, 2.0, 0.5, &s).unwrap();
        assert_eq!(r.accepted, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(r.witness, Some(0.5));
    }

    #[test]
    fn sine_accepts_near_multiples_of_two_pi() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let s = AveragingScheme::new(vec![50.0, 100.0], 1.0 / 32.0, 1).unwrap();
        let r = almost_periods(&f, 0.2, AlmostPeriodMetric::Besicovitch { p: 2.0 }, 13.0, 0.05, &s).unwrap();
        // the exact distance is sqrt(2) |sin(tau / 2)|
        let near = |t: f64| (t / TAU - (t / TAU).round()).abs() * TAU < 0.29;
        assert!(r.accepted.iter().all(|&t| near(t)));
        assert!(r.accepted.iter().any(|t| (t - TAU).abs() < 0.05));
    }

    #[test]
    fn rejects_bad_grid() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let s = AveragingScheme::new(vec![50.0], 0.25, 1).unwrap();
        assert!(almost_periods(&f, 0.2, AlmostPeriodMetric::Capped, 1.0, 0.0, &s).is_err());
    }
}
