use super::{FuncExpr, Node};
use crate::space::norm;

impl FuncExpr {
    /// Upper bound on `sup_t |f(t)|`, when one can be derived symbolically.
    pub fn sup_bound(&self) -> Option<f64> {
        match self.node() {
            Node::Trig(p) => Some(p.coef_norm_sum()),
            Node::Step(s) => s.branches.iter().map(|b| b.sup_bound()).try_fold(0.0f64, |acc, b| Some(acc.max(b?))),
            Node::Shift { inner, .. } => inner.sup_bound(),
            Node::Truncate { inner, radius } => Some(inner.sup_bound().map_or(*radius, |s| s.min(*radius))),
            Node::Sgn(_) => Some(1.0),
            Node::Sum(a, b) => Some(a.sup_bound()? + b.sup_bound()?),
            Node::ScalarProd { scalar, vector } => Some(scalar.sup_bound()? * vector.sup_bound()?),
            Node::Perturbed { inner, series } => Some(inner.sup_bound()? + series.sup_bound()),
            Node::Dist { inner, point, metric } => {
                let s = inner.sup_bound()? + norm(point);
                Some(if *metric == crate::space::PointMetric::Capped { s.min(1.0) } else { s })
            }
            Node::Stack(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    let s = p.sup_bound()?;
                    acc += s * s;
                }
                Some(acc.sqrt())
            }
        }
    }

    /// Upper bound on the Lipschitz constant in `t`, when one exists and can be
    /// derived symbolically. Step compositions and sign maps are discontinuous
    /// in general and give `None`.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self.node() {
            Node::Trig(p) => Some(p.lipschitz_bound()),
            Node::Step(_) | Node::Sgn(_) => None,
            Node::Shift { inner, .. } => inner.lipschitz_bound(),
            // Radial truncation is 2-Lipschitz on any normed space.
            Node::Truncate { inner, .. } => Some(2.0 * inner.lipschitz_bound()?),
            Node::Sum(a, b) => Some(a.lipschitz_bound()? + b.lipschitz_bound()?),
            Node::ScalarProd { scalar, vector } => Some(
                scalar.lipschitz_bound()? * vector.sup_bound()? + scalar.sup_bound()? * vector.lipschitz_bound()?,
            ),
            Node::Perturbed { inner, series } => Some(inner.lipschitz_bound()? + series.lipschitz_bound()),
            Node::Dist { inner, .. } => inner.lipschitz_bound(),
            Node::Stack(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    let l = p.lipschitz_bound()?;
                    acc += l * l;
                }
                Some(acc.sqrt())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use crate::expr::{FuncExpr, TrigBuilder};
    use crate::freq::FrequencyBasis;
    use crate::space::PointMetric;

    #[test]
    fn bounds_dominate_sampled_behaviour() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0, 2f64.sqrt()]).unwrap());
        let f = FuncExpr::trig(TrigBuilder::new(b.clone(), 1).sin(0, &[1, 0], 1.0).sin(0, &[0, 1], 0.5).build().unwrap());
        let e = f.dist_to(&[0.3], PointMetric::Euclidean).unwrap().truncate(0.8).unwrap();
        let l = e.lipschitz_bound().unwrap();
        let s = e.sup_bound().unwrap();
        let h = 1e-3;
        for k in 0..5000 {
            let t = k as f64 * 0.01;
            let v = e.eval_scalar(t).unwrap();
            let w = e.eval_scalar(t + h).unwrap();
            assert!(v.abs() <= s + 1e-12);
            assert!((w - v).abs() <= l * h + 1e-12);
        }
        assert!(f.sgn().lipschitz_bound().is_none());
    }
}
