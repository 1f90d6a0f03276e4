use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::metrics::{capped_shift_distance, AveragingScheme};

/// Geometric shift probes `start * ratio^k`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

pub const PROBE_RATIO: f64 = 1.189_207_115_002_721; // 2^(1/4)
pub const PROBE_COUNT: usize = 64;

impl ProbeGrid {
    pub fn new(start: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && start.is_finite() && ratio > 1.0 && ratio.is_finite() && count >= 1) {
            return Err(Error::invalid("probe grid needs start > 0, ratio > 1 and count >= 1"));
        }
        Ok(ProbeGrid { start, ratio, count })
    }

    /// Starts at half the shift where the Lipschitz bound alone would reach
    /// `bound`, so the first probe passes whenever the quadrature is sound.
    /// Families without a symbolic Lipschitz bound start at `fallback`.
    pub fn for_family(family: &[FuncExpr], bound: f64, fallback: f64) -> Result<Self> {
        let lip = family
            .iter()
            .map(|f| f.lipschitz_bound())
            .try_fold(0.0f64, |acc, l| Some(acc.max(l?)));
        let start = match lip {
            Some(l) if l > 0.0 => 0.5 * bound / l,
            Some(_) => fallback.max(1.0),
            None => fallback,
        };
        Self::new(start, PROBE_RATIO, PROBE_COUNT)
    }

    pub fn taus(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.start * self.ratio.powi(k as i32))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tau0Estimate {
    pub tau0: f64,
    /// `(tau, max over the family of the capped shift distance)` per probe,
    /// up to and including the first failure.
    pub scan: Vec<(f64, f64)>,
}

/// Largest probe `tau0` such that every probe up to it keeps the capped
/// Besicovitch shift distance of every member below `bound`. Vector members
/// use the Euclidean norm of the shift difference.
pub fn tau0_estimate(
    family: &[FuncExpr],
    bound: f64,
    scheme: &AveragingScheme,
    probes: &ProbeGrid,
) -> Result<Tau0Estimate> {
    if family.is_empty() {
        return Err(Error::invalid("family must be non-empty"));
    }
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::invalid("bound must be positive and finite"));
    }
    let mut scan = Vec::new();
    let mut tau0 = None;
    for tau in probes.taus() {
        let mut worst = 0.0f64;
        for f in family {
            worst = worst.max(capped_shift_distance(f, tau, scheme)?.value);
            if worst >= bound {
                break;
            }
        }
        scan.push((tau, worst));
        if worst >= bound {
            break;
        }
        tau0 = Some(tau);
    }
    match tau0 {
        Some(tau0) => Ok(Tau0Estimate { tau0, scan }),
        None => Err(Error::NoProbePasses { probe: scan[0].0, distance: scan[0].1, bound }),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::freq::FrequencyBasis;

    fn scheme() -> AveragingScheme {
        AveragingScheme::new(vec![100.0, 200.0], 1.0 / 64.0, 1).unwrap()
    }

    #[test]
    fn constant_family_passes_every_probe() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let c = FuncExpr::constant(&b, &[0.3]).unwrap();
        let grid = ProbeGrid::new(0.01, 2.0, 5).unwrap();
        let r = tau0_estimate(&[c], 0.1, &scheme(), &grid).unwrap();
        assert_eq!(r.tau0, 0.16);
        assert_eq!(r.scan.len(), 5);
    }

    #[test]
    fn sine_threshold_matches_closed_form() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let grid = ProbeGrid::for_family(std::slice::from_ref(&f), 0.1, 1e-3).unwrap();
        let r = tau0_estimate(&[f], 0.1, &scheme(), &grid).unwrap();
        // distance is (4/pi) sin(tau/2)
        let exact = 2.0 * (0.1 * std::f64::consts::PI / 4.0).asin();
        assert!(r.tau0 <= exact * 1.001 && r.tau0 * PROBE_RATIO > exact * 0.999, "{}", r.tau0);
    }

    #[test]
    fn failure_on_first_probe() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let grid = ProbeGrid::new(3.0, 2.0, 4).unwrap();
        assert!(matches!(tau0_estimate(&[f], 0.1, &scheme(), &grid), Err(Error::NoProbePasses { .. })));
    }
}
