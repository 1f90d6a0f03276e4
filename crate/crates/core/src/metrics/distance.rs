use serde::{Deserialize, Serialize};

use super::quadrature::{DoubleDouble, Grid};
use super::{check_p, AverageEstimate, AveragingScheme};
use crate::error::{Error, Result};
use crate::expr::{FuncExpr, Span};
use crate::space::{norm, MetricKind, MetricSpace, PointMetric};

/// Largest unit-window integral and where it starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub value: f64,
    pub xi: f64,
}

/// Largest sampled value and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupEstimate {
    pub value: f64,
    pub t: f64,
}

/// Windowed lim sup of `(1/2b) int_{-b}^{b} h`.
pub fn time_average(h: &FuncExpr, scheme: &AveragingScheme) -> Result<AverageEstimate> {
    if h.dim() != 1 {
        return Err(Error::DimMismatch { expected: 1, found: h.dim() });
    }
    let grid = Grid::new(scheme);
    let avs = grid.averages(1, |span, out| {
        h.eval_span(span, out)?;
        check_finite(out, span)
    })?;
    let avs: Vec<f64> = avs.into_iter().map(|v| v[0]).collect();
    Ok(AverageEstimate::from_averages(&grid.horizons(), &avs, scheme.window()))
}

fn check_finite(vals: &[f64], span: Span) -> Result<()> {
    if let Some(k) = vals.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue(span.time(k)));
    }
    Ok(())
}

fn check_pair(f: &FuncExpr, g: &FuncExpr, space: &MetricSpace) -> Result<()> {
    for e in [f, g] {
        if e.dim() != space.dim {
            return Err(Error::DimMismatch { expected: space.dim, found: e.dim() });
        }
    }
    Ok(())
}

/// Fills `out` with `rho(f(t), g(t))` over a span.
fn pair_distances(f: &FuncExpr, g: &FuncExpr, metric: &PointMetric, span: Span, out: &mut [f64]) -> Result<()> {
    let d = f.dim();
    let mut a = vec![0.0; span.len * d];
    let mut b = vec![0.0; span.len * d];
    f.eval_span(span, &mut a)?;
    g.eval_span(span, &mut b)?;
    for k in 0..span.len {
        out[k] = metric.dist(&a[k * d..(k + 1) * d], &b[k * d..(k + 1) * d]);
    }
    check_finite(out, span)
}

/// Besicovitch distance `(lim sup (1/2b) int rho^p)^(1/p)`.
///
/// In a capped space this is the distance of the capped metric and `p` must
/// be 1. Per-horizon entries are reported after taking the root.
pub fn besicovitch_distance(
    f: &FuncExpr,
    g: &FuncExpr,
    p: f64,
    space: &MetricSpace,
    scheme: &AveragingScheme,
) -> Result<AverageEstimate> {
    check_p(p)?;
    check_pair(f, g, space)?;
    if space.metric == MetricKind::Capped && p != 1.0 {
        return Err(Error::invalid("the capped metric is used with p = 1"));
    }
    let metric = space.point_metric();
    let grid = Grid::new(scheme);
    let avs = grid.averages(1, |span, out| {
        pair_distances(f, g, &metric, span, out)?;
        if p != 1.0 {
            for v in out.iter_mut() {
                *v = v.powf(p);
            }
        }
        Ok(())
    })?;
    let raw: Vec<f64> = avs.into_iter().map(|v| v[0]).collect();
    let est = AverageEstimate::from_averages(&grid.horizons(), &raw, scheme.window());
    Ok(if p == 1.0 { est } else { est.map(|x| x.powf(1.0 / p), scheme.window()) })
}

/// Stepanov distance: the largest `(int_xi^{xi+1} rho^p)^(1/p)` over unit
/// windows starting on grid points in `[-b_max, b_max - 1]`. Ties go to the
/// smallest `xi`.
pub fn stepanov_distance(
    f: &FuncExpr,
    g: &FuncExpr,
    p: f64,
    space: &MetricSpace,
    scheme: &AveragingScheme,
) -> Result<WindowEstimate> {
    check_p(p)?;
    check_pair(f, g, space)?;
    let metric = space.point_metric();
    window_max(scheme, p, |span, out| pair_distances(f, g, &metric, span, out))
}

/// Largest sampled `rho(f(t), g(t))` on the widest horizon.
pub fn sup_distance(f: &FuncExpr, g: &FuncExpr, space: &MetricSpace, scheme: &AveragingScheme) -> Result<SupEstimate> {
    check_pair(f, g, space)?;
    let metric = space.point_metric();
    let grid = Grid::new(scheme);
    let n = grid.n_max();
    let mut best = SupEstimate { value: f64::NEG_INFINITY, t: f64::NAN };
    let mut buf = Vec::new();
    grid.for_each(-n, n, |_, span| {
        buf.resize(span.len, 0.0);
        pair_distances(f, g, &metric, span, &mut buf)?;
        for (k, &v) in buf.iter().enumerate() {
            if v > best.value {
                best = SupEstimate { value: v, t: span.time(k) };
            }
        }
        Ok(())
    })?;
    Ok(best)
}

/// Sliding unit-window maximum of `rho^p` over the widest horizon.
pub(crate) fn window_max<F>(scheme: &AveragingScheme, p: f64, mut rho: F) -> Result<WindowEstimate>
where
    F: FnMut(Span, &mut [f64]) -> Result<()>,
{
    let grid = Grid::new(scheme);
    let n = grid.n_max();
    let m = (1.0 / grid.h).round() as usize;
    if 2 * n < m as i64 {
        return Err(Error::InvalidScheme("widest horizon is shorter than a unit window".into()));
    }
    let mut ring = vec![0.0; m];
    let mut sum = DoubleDouble::default();
    let mut seen = 0usize;
    let mut best = WindowEstimate { value: f64::NEG_INFINITY, xi: f64::NAN };
    let mut buf = Vec::new();
    grid.for_each(-n, n, |first, span| {
        buf.resize(span.len, 0.0);
        rho(span, &mut buf)?;
        for (k, &r) in buf.iter().enumerate() {
            let v = if p == 1.0 { r } else { r.powf(p) };
            let slot = seen % m;
            if seen >= m {
                sum.add(-ring[slot]);
            }
            ring[slot] = v;
            sum.add(v);
            seen += 1;
            if seen >= m {
                let start = first + k as i64 + 1 - m as i64;
                let integral = sum.value() * grid.h;
                if integral > best.value {
                    best = WindowEstimate { value: integral, xi: start as f64 * grid.h };
                }
            }
        }
        Ok(())
    })?;
    best.value = best.value.max(0.0).powf(1.0 / p);
    Ok(best)
}

/// Capped Besicovitch distance between `f` and `f(. + tau)`, using the
/// cancellation-free shift difference.
pub fn capped_shift_distance(f: &FuncExpr, tau: f64, scheme: &AveragingScheme) -> Result<AverageEstimate> {
    if !tau.is_finite() {
        return Err(Error::invalid("shift must be finite"));
    }
    let d = f.dim();
    let grid = Grid::new(scheme);
    let mut val = Vec::new();
    let mut delta = Vec::new();
    let avs = grid.averages(1, |span, out| {
        val.resize(span.len * d, 0.0);
        delta.resize(span.len * d, 0.0);
        f.eval_span_delta(span, tau, &mut val, &mut delta)?;
        for k in 0..span.len {
            out[k] = norm(&delta[k * d..(k + 1) * d]).min(1.0);
        }
        check_finite(out, span)
    })?;
    let avs: Vec<f64> = avs.into_iter().map(|v| v[0]).collect();
    Ok(AverageEstimate::from_averages(&grid.horizons(), &avs, scheme.window()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::TrigBuilder;
    use crate::freq::FrequencyBasis;

    fn basis() -> Arc<FrequencyBasis> {
        Arc::new(FrequencyBasis::new(vec![1.0]).unwrap())
    }

    fn scheme() -> AveragingScheme {
        AveragingScheme::new(vec![100.0, 200.0, 400.0], 1.0 / 128.0, 2).unwrap()
    }

    #[test]
    fn mean_of_sine_square() {
        let b = basis();
        let s = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let zero = FuncExpr::constant(&b, &[0.0]).unwrap();
        let est = besicovitch_distance(&s, &zero, 2.0, &MetricSpace::euclidean(1), &scheme()).unwrap();
        assert!((est.value - 0.5f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn capped_constant_saturates() {
        let b = basis();
        let five = FuncExpr::constant(&b, &[5.0]).unwrap();
        let zero = FuncExpr::constant(&b, &[0.0]).unwrap();
        let est = besicovitch_distance(&five, &zero, 1.0, &MetricSpace::capped(1), &scheme()).unwrap();
        assert_eq!(est.value, 1.0);
        assert!(besicovitch_distance(&five, &zero, 2.0, &MetricSpace::capped(1), &scheme()).is_err());
    }

    #[test]
    fn exponent_below_one_is_rejected() {
        let b = basis();
        let z = FuncExpr::constant(&b, &[0.0]).unwrap();
        assert!(besicovitch_distance(&z, &z, 0.5, &MetricSpace::euclidean(1), &scheme()).is_err());
        assert!(stepanov_distance(&z, &z, 0.5, &MetricSpace::euclidean(1), &scheme()).is_err());
    }

    #[test]
    fn stepanov_of_constant_difference() {
        let b = basis();
        let one = FuncExpr::constant(&b, &[1.0]).unwrap();
        let zero = FuncExpr::constant(&b, &[0.0]).unwrap();
        let w = stepanov_distance(&one, &zero, 2.0, &MetricSpace::euclidean(1), &scheme()).unwrap();
        assert!((w.value - 1.0).abs() < 1e-12);
        assert_eq!(w.xi, -400.0);
    }

    #[test]
    fn sup_distance_of_sines() {
        let b = basis();
        let s = FuncExpr::trig(TrigBuilder::new(b.clone(), 1).sin(0, &[1], 2.0).build().unwrap());
        let zero = FuncExpr::constant(&b, &[0.0]).unwrap();
        let e = sup_distance(&s, &zero, &MetricSpace::euclidean(1), &scheme()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-4);
    }

    #[test]
    fn shift_distance_closed_form() {
        let b = basis();
        let s = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        for &tau in &[0.05, 0.3, 1e-9] {
            let e = capped_shift_distance(&s, tau, &scheme()).unwrap();
            let expect = 4.0 / std::f64::consts::PI * (tau / 2.0).sin();
            assert!((e.value - expect).abs() < 2e-3 * expect.max(1e-9), "tau {tau}: {} vs {expect}", e.value);
        }
    }
}
