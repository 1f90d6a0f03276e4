use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::space::{MetricSpace, PointMetric};

/// `F(t) = {f_1(t), .., f_K(t)}` for finitely many trajectories.
#[derive(Debug, Clone)]
pub struct MultiMap {
    trajectories: Vec<FuncExpr>,
    space: MetricSpace,
}

impl MultiMap {
    pub fn new(trajectories: Vec<FuncExpr>, space: MetricSpace) -> Result<Self> {
        if trajectories.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(t) = trajectories.iter().find(|t| t.dim() != space.dim) {
            return Err(Error::DimMismatch { expected: space.dim, found: t.dim() });
        }
        Ok(MultiMap { trajectories, space })
    }

    pub fn trajectories(&self) -> &[FuncExpr] {
        &self.trajectories
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn values(&self, t: f64) -> Result<Vec<Vec<f64>>> {
        self.trajectories.iter().map(|f| f.eval(t)).collect()
    }

    /// `rho(y, F(t))`.
    pub fn dist_to(&self, t: f64, y: &[f64]) -> Result<f64> {
        let values = self.values(t)?;
        Ok(values.iter().map(|v| self.space.dist(v, y)).fold(f64::INFINITY, f64::min))
    }

    /// Stacks the trajectories (and any extra components) into one function.
    pub fn stacked(&self, extra: &[FuncExpr]) -> Result<FuncExpr> {
        let mut parts = self.trajectories.clone();
        parts.extend_from_slice(extra);
        FuncExpr::stack(parts)
    }

    /// Block metric on stacked values: the maximum over blocks of the
    /// Euclidean distance, which bounds the Hausdorff distance between the
    /// stacked point sets.
    pub fn block_metric(&self, extra_blocks: usize) -> PointMetric {
        PointMetric::BlockMax(vec![self.space.dim; self.trajectories.len() + extra_blocks])
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::freq::FrequencyBasis;

    #[test]
    fn construction_and_distance() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let s = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let c = FuncExpr::constant(&b, &[2.0]).unwrap();
        let m = MultiMap::new(vec![s.clone(), s.add(&c).unwrap()], MetricSpace::euclidean(1)).unwrap();
        assert_eq!(m.dist_to(0.0, &[1.5]).unwrap(), 0.5);
        assert_eq!(m.stacked(&[]).unwrap().dim(), 2);
        assert!(MultiMap::new(vec![], MetricSpace::euclidean(1)).is_err());
        assert!(MultiMap::new(vec![s], MetricSpace::euclidean(2)).is_err());
    }
}
