//! Target metric spaces: `R^d` with the Euclidean metric or its unit cap
//! `min(1, |x - y|)`, plus a block-max metric for product spaces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    Capped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    pub dim: usize,
    pub metric: MetricKind,
    pub base_point: Vec<f64>,
}

impl MetricSpace {
    pub fn new(dim: usize, metric: MetricKind, base_point: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("space dimension must be positive"));
        }
        if base_point.len() != dim {
            return Err(Error::DimMismatch { expected: dim, found: base_point.len() });
        }
        if base_point.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("base point must be finite"));
        }
        Ok(MetricSpace { dim, metric, base_point })
    }

    pub fn euclidean(dim: usize) -> Self {
        MetricSpace { dim, metric: MetricKind::Euclidean, base_point: vec![0.0; dim] }
    }

    pub fn capped(dim: usize) -> Self {
        MetricSpace { dim, metric: MetricKind::Capped, base_point: vec![0.0; dim] }
    }

    pub fn point_metric(&self) -> PointMetric {
        match self.metric {
            MetricKind::Euclidean => PointMetric::Euclidean,
            MetricKind::Capped => PointMetric::Capped,
        }
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        self.point_metric().dist(x, y)
    }
}

/// Distance on `R^d` used by distance expressions and partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointMetric {
    Euclidean,
    Capped,
    /// Maximum of Euclidean distances over consecutive coordinate blocks.
    BlockMax(Vec<usize>),
}

impl PointMetric {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let PointMetric::BlockMax(blocks) = self {
            if blocks.contains(&0) {
                return Err(Error::invalid("block sizes must be positive"));
            }
            let total: usize = blocks.iter().sum();
            if total != dim {
                return Err(Error::DimMismatch { expected: dim, found: total });
            }
        }
        Ok(())
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            PointMetric::Euclidean => euclid(x, y),
            PointMetric::Capped => euclid(x, y).min(1.0),
            PointMetric::BlockMax(blocks) => {
                let mut start = 0;
                let mut best = 0.0f64;
                for &len in blocks {
                    let d = euclid(&x[start..start + len], &y[start..start + len]);
                    if d > best {
                        best = d;
                    }
                    start += len;
                }
                best
            }
        }
    }

    /// Whether `|x[0] - y[0]| >= r` implies `dist(x, y) >= r`, so that
    /// nearest-center searches can prune on the first coordinate.
    pub fn prunes_at(&self, r: f64) -> bool {
        match self {
            PointMetric::Euclidean | PointMetric::BlockMax(_) => true,
            PointMetric::Capped => r <= 1.0,
        }
    }

    /// Returns `(rho(a, x), rho(a + da, x) - rho(a, x))`, computing the
    /// difference without cancellation when `da` is tiny.
    pub(crate) fn dist_and_delta(&self, a: &[f64], da: &[f64], x: &[f64]) -> (f64, f64) {
        match self {
            PointMetric::Euclidean => euclid_delta(a, da, x),
            PointMetric::Capped => {
                let (r0, d) = euclid_delta(a, da, x);
                let r1 = r0 + d;
                if r0 < 1.0 && r1 < 1.0 {
                    (r0, d)
                } else {
                    (r0.min(1.0), r1.min(1.0) - r0.min(1.0))
                }
            }
            PointMetric::BlockMax(blocks) => {
                let mut start = 0;
                // (r0, d) of the blocks attaining the max before and after the shift
                let (mut p0, mut r0_best) = ((0.0, 0.0), f64::NEG_INFINITY);
                let (mut p1, mut r1_best) = ((0.0, 0.0), f64::NEG_INFINITY);
                let (mut j0, mut j1) = (usize::MAX, usize::MAX);
                for (j, &len) in blocks.iter().enumerate() {
                    let s = start..start + len;
                    let (r0, d) = euclid_delta(&a[s.clone()], &da[s.clone()], &x[s]);
                    if r0 > r0_best {
                        r0_best = r0;
                        p0 = (r0, d);
                        j0 = j;
                    }
                    if r0 + d > r1_best {
                        r1_best = r0 + d;
                        p1 = (r0, d);
                        j1 = j;
                    }
                    start += len;
                }
                if blocks.is_empty() {
                    return (0.0, 0.0);
                }
                let delta = if j0 == j1 { p0.1 } else { (p1.0 - p0.0) + p1.1 };
                (r0_best, delta)
            }
        }
    }
}

pub fn euclid(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 1 {
        return (x[0] - y[0]).abs();
    }
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn norm(x: &[f64]) -> f64 {
    if x.len() == 1 {
        return x[0].abs();
    }
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn euclid_delta(a: &[f64], da: &[f64], x: &[f64]) -> (f64, f64) {
    if a.len() == 1 {
        let u = a[0] - x[0];
        let r0 = u.abs();
        let r1 = (u + da[0]).abs();
        if r0 + r1 == 0.0 {
            return (0.0, 0.0);
        }
        // |u + d| - |u| = (2ud + d^2) / (|u + d| + |u|)
        return (r0, (2.0 * u * da[0] + da[0] * da[0]) / (r0 + r1));
    }
    let mut r0sq = 0.0;
    let mut r1sq = 0.0;
    let mut num = 0.0;
    for i in 0..a.len() {
        let u = a[i] - x[i];
        r0sq += u * u;
        r1sq += (u + da[i]) * (u + da[i]);
        num += 2.0 * u * da[i] + da[i] * da[i];
    }
    let (r0, r1) = (r0sq.sqrt(), r1sq.sqrt());
    if r0 + r1 == 0.0 {
        return (0.0, 0.0);
    }
    (r0, num / (r0 + r1))
}
