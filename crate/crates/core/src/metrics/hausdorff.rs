use crate::error::{Error, Result};
use crate::space::PointMetric;

/// Hausdorff distance between finite point sets.
pub fn dist_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>], metric: &PointMetric) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let d = a[0].len();
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != d) {
        return Err(Error::DimMismatch { expected: d, found: p.len() });
    }
    Ok(directed(a, b, metric).max(directed(b, a, metric)))
}

fn directed(a: &[Vec<f64>], b: &[Vec<f64>], metric: &PointMetric) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| metric.dist(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let m = PointMetric::Euclidean;
        let a = vec![vec![0.0], vec![1.0]];
        assert_eq!(dist_hausdorff(&a, &a, &m).unwrap(), 0.0);
        assert_eq!(dist_hausdorff(&a, &[vec![0.0]], &m).unwrap(), 1.0);
        assert_eq!(dist_hausdorff(&[vec![0.0]], &[vec![3.0]], &PointMetric::Capped).unwrap(), 1.0);
        assert_eq!(dist_hausdorff(&[], &a, &m), Err(Error::EmptySet));
    }
}
