use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::metrics::quadrature::Grid;
use crate::metrics::{AverageEstimate, AveragingScheme};
use crate::space::PointMetric;

pub const DEFAULT_MAX_CENTERS: usize = 20_000;

/// Greedy covering centers and the residual densities of their prefixes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    /// The shortest prefix of the greedy centers that meets the target.
    pub centers: Vec<Vec<f64>>,
    /// Upper density of the times not covered by `centers`.
    pub residual: AverageEstimate,
    /// `curve[n]`: windowed residual estimate with the first `n + 1` centers.
    pub curve: Vec<f64>,
    /// Number of centers the full greedy pass produced.
    pub greedy_total: usize,
}

/// Centers sorted by their first coordinate, for pruned range queries.
#[derive(Debug, Clone, Default)]
pub(crate) struct CenterIndex {
    keys: Vec<(f64, usize)>,
}

impl CenterIndex {
    pub fn new() -> Self {
        CenterIndex { keys: Vec::new() }
    }

    pub fn insert(&mut self, first: f64, index: usize) {
        let pos = self.keys.partition_point(|&(k, i)| (k, i) < (first, index));
        self.keys.insert(pos, (first, index));
    }

    /// Indices of centers with first coordinate in `(x - r, x + r)`.
    pub fn window(&self, x: f64, r: f64) -> impl Iterator<Item = usize> + '_ {
        let lo = self.keys.partition_point(|&(k, _)| k <= x - r);
        self.keys[lo..].iter().take_while(move |&&(k, _)| k < x + r).map(|&(_, i)| i)
    }
}

/// Index of the first center within `delta` of `y`, if any.
fn first_within(y: &[f64], centers: &[Vec<f64>], index: &CenterIndex, delta: f64, metric: &PointMetric) -> Option<usize> {
    let mut best: Option<usize> = None;
    let mut check = |j: usize| {
        if best.is_none_or(|b| j < b) && metric.dist(y, &centers[j]) < delta {
            best = Some(j);
        }
    };
    if metric.prunes_at(delta) {
        for j in index.window(y[0], delta) {
            check(j);
        }
    } else {
        for j in 0..centers.len() {
            check(j);
        }
    }
    best
}

/// Shell of sample `i`: the first horizon whose index range contains it.
fn shell_of(halves: &[i64], i: i64) -> usize {
    let a = if i >= 0 { i } else { -i - 1 };
    halves.partition_point(|&n| n <= a)
}

/// Greedy covering of the values of `f` on the largest-horizon grid, scanning
/// times in increasing order. A sample becomes a new center when it is at
/// least `delta` from every existing center.
pub fn cover_points(
    f: &FuncExpr,
    delta: f64,
    eps_resid: f64,
    metric: &PointMetric,
    scheme: &AveragingScheme,
    max_centers: usize,
) -> Result<Cover> {
    let d = f.dim();
    metric.validate(d)?;
    greedy(d, 1, delta, eps_resid, metric, scheme, max_centers, |span, out| {
        f.eval_span(span, out)?;
        Ok(())
    })
}

/// Covering of the bundle `{f_1(t), .., f_K(t)}`: a time counts as covered
/// when every trajectory value is.
pub fn cover_bundle(
    trajectories: &[FuncExpr],
    delta: f64,
    eps_resid: f64,
    metric: &PointMetric,
    scheme: &AveragingScheme,
    max_centers: usize,
) -> Result<Cover> {
    let Some(first) = trajectories.first() else {
        return Err(Error::EmptySet);
    };
    let d = first.dim();
    if let Some(t) = trajectories.iter().find(|t| t.dim() != d) {
        return Err(Error::DimMismatch { expected: d, found: t.dim() });
    }
    metric.validate(d)?;
    let k = trajectories.len();
    let mut tmp = Vec::new();
    greedy(d, k, delta, eps_resid, metric, scheme, max_centers, |span, out| {
        tmp.resize(span.len * d, 0.0);
        for (m, traj) in trajectories.iter().enumerate() {
            traj.eval_span(span, &mut tmp)?;
            for s in 0..span.len {
                let dst = (s * k + m) * d;
                out[dst..dst + d].copy_from_slice(&tmp[s * d..(s + 1) * d]);
            }
        }
        Ok(())
    })
}

#[allow(clippy::too_many_arguments)]
fn greedy<F>(
    d: usize,
    per_sample: usize,
    delta: f64,
    eps_resid: f64,
    metric: &PointMetric,
    scheme: &AveragingScheme,
    max_centers: usize,
    mut fill: F,
) -> Result<Cover>
where
    F: FnMut(crate::expr::Span, &mut [f64]) -> Result<()>,
{
    if !(delta > 0.0 && delta.is_finite() && eps_resid > 0.0) {
        return Err(Error::invalid("cover needs delta > 0 and eps_resid > 0"));
    }
    if max_centers == 0 {
        return Err(Error::invalid("center budget must be positive"));
    }
    let grid = Grid::new(scheme);
    let n = grid.n_max();
    let shells = grid.halves.len();
    // hist[s][c]: samples of shell s whose covering index is c; the last
    // slot counts samples left uncovered by a full budget.
    let mut hist: Vec<Vec<u64>> = vec![Vec::new(); shells];
    let mut uncovered = vec![0u64; shells];
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut index = CenterIndex::new();
    let mut buf = Vec::new();
    grid.for_each(-n, n, |first, span| {
        buf.resize(span.len * per_sample * d, 0.0);
        fill(span, &mut buf)?;
        for s in 0..span.len {
            let i = first + s as i64;
            let mut need = 0usize;
            let mut lost = false;
            for m in 0..per_sample {
                let y = &buf[(s * per_sample + m) * d..(s * per_sample + m + 1) * d];
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteValue(grid.time(i)));
                }
                let c = match first_within(y, &centers, &index, delta, metric) {
                    Some(c) => c,
                    None if centers.len() < max_centers => {
                        index.insert(y[0], centers.len());
                        centers.push(y.to_vec());
                        centers.len() - 1
                    }
                    None => {
                        lost = true;
                        continue;
                    }
                };
                need = need.max(c);
            }
            let sh = shell_of(&grid.halves, i);
            if lost {
                uncovered[sh] += 1;
            } else {
                if hist[sh].len() <= need {
                    hist[sh].resize(need + 1, 0);
                }
                hist[sh][need] += 1;
            }
        }
        Ok(())
    })?;

    let total = centers.len();
    let horizons = grid.horizons();
    let window = scheme.window();
    // residual with the first m centers: samples whose covering index is >= m
    let mut above: Vec<u64> = uncovered.clone();
    let mut estimates: Vec<AverageEstimate> = Vec::with_capacity(total + 1);
    let mut counts: Vec<Vec<u64>> = vec![Vec::new(); total + 1];
    counts[total] = above.clone();
    for m in (0..total).rev() {
        for (s, h) in hist.iter().enumerate() {
            above[s] += h.get(m).copied().unwrap_or(0);
        }
        counts[m] = above.clone();
    }
    for c in &counts {
        let mut acc = 0u64;
        let avs: Vec<f64> = c
            .iter()
            .zip(&grid.halves)
            .map(|(&x, &nk)| {
                acc += x;
                acc as f64 / (2 * nk) as f64
            })
            .collect();
        estimates.push(AverageEstimate::from_averages(&horizons, &avs, window));
    }
    let curve: Vec<f64> = estimates[1..].iter().map(|e| e.value).collect();
    match (1..=total).find(|&m| estimates[m].value < eps_resid) {
        Some(m) => Ok(Cover {
            centers: centers[..m].to_vec(),
            residual: estimates[m].clone(),
            curve,
            greedy_total: total,
        }),
        None if total == 0 => Err(Error::CoverBudget { budget: max_centers }),
        None if total >= max_centers => Err(Error::CoverBudget { budget: max_centers }),
        None => Err(Error::ResidualUnmet { achieved: estimates[total].value, target: eps_resid, centers: total }),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::TrigBuilder;
    use crate::freq::FrequencyBasis;

    fn scheme() -> AveragingScheme {
        AveragingScheme::new(vec![100.0, 200.0, 400.0], 1.0 / 64.0, 2).unwrap()
    }

    #[test]
    fn constant_has_one_center() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let c = FuncExpr::constant(&b, &[0.25, -1.0]).unwrap();
        let cover = cover_points(&c, 0.1, 1e-3, &PointMetric::Euclidean, &scheme(), 10).unwrap();
        assert_eq!(cover.centers, vec![vec![0.25, -1.0]]);
        assert_eq!(cover.residual.value, 0.0);
    }

    #[test]
    fn interval_cover_count() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let cover = cover_points(&f, 0.3, 1e-3, &PointMetric::Euclidean, &scheme(), 100).unwrap();
        assert!(cover.centers.len() <= 8, "{}", cover.centers.len());
        assert!(cover.residual.value < 1e-3);
        // centers are pairwise at least delta apart
        for (i, a) in cover.centers.iter().enumerate() {
            for b in &cover.centers[..i] {
                assert!((a[0] - b[0]).abs() >= 0.3);
            }
        }
    }

    #[test]
    fn circle_cover() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::trig(TrigBuilder::new(b, 2).cos(0, &[1], 1.0).sin(1, &[1], 1.0).build().unwrap());
        let cover = cover_points(&f, 0.5, 1e-3, &PointMetric::Euclidean, &scheme(), 100).unwrap();
        assert!((8..=16).contains(&cover.centers.len()), "{}", cover.centers.len());
    }

    #[test]
    fn curve_is_non_increasing() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0, 2f64.sqrt()]).unwrap());
        let f = FuncExpr::trig(TrigBuilder::new(b, 2).sin(0, &[1, 0], 1.0).sin(1, &[0, 1], 1.0).build().unwrap());
        let cover = cover_points(&f, 0.2, 0.01, &PointMetric::Euclidean, &scheme(), 1000).unwrap();
        assert!(cover.curve.windows(2).all(|w| w[1] <= w[0]));
        assert!(cover.residual.value < 0.01);
    }

    #[test]
    fn budget_exhaustion() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let r = cover_points(&f, 0.01, 1e-6, &PointMetric::Euclidean, &scheme(), 5);
        assert_eq!(r.unwrap_err(), Error::CoverBudget { budget: 5 });
    }

    #[test]
    fn shells() {
        let halves = [4, 8];
        assert_eq!(shell_of(&halves, 0), 0);
        assert_eq!(shell_of(&halves, -4), 0);
        assert_eq!(shell_of(&halves, 4), 1);
        assert_eq!(shell_of(&halves, -5), 1);
    }
}
