//! Measurable subsets of the line built from level sets of scalar expressions.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{FuncExpr, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Le,
    Lt,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::Le => value <= threshold,
            Relation::Lt => value < threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    /// `{t : expr(t) rel threshold}` for a scalar expression.
    Level { expr: FuncExpr, threshold: f64, relation: Relation },
    Union(Arc<SetExpr>, Arc<SetExpr>),
    Intersect(Arc<SetExpr>, Arc<SetExpr>),
    Diff(Arc<SetExpr>, Arc<SetExpr>),
    Complement(Arc<SetExpr>),
    FullLine,
    Empty,
}

impl SetExpr {
    pub fn level(expr: FuncExpr, threshold: f64, relation: Relation) -> Result<Self> {
        if expr.dim() != 1 {
            return Err(Error::DimMismatch { expected: 1, found: expr.dim() });
        }
        if threshold.is_nan() {
            return Err(Error::invalid("level threshold is NaN"));
        }
        Ok(SetExpr::Level { expr, threshold, relation })
    }

    /// `{t : |expr(t)| < radius}` for a scalar expression.
    pub fn band(expr: FuncExpr, radius: f64) -> Result<Arc<SetExpr>> {
        let below = Arc::new(SetExpr::level(expr.clone(), radius, Relation::Lt)?);
        let floor = Arc::new(SetExpr::level(expr, -radius, Relation::Le)?);
        Ok(SetExpr::diff(below, floor))
    }

    pub fn union(a: Arc<SetExpr>, b: Arc<SetExpr>) -> Arc<SetExpr> {
        Arc::new(SetExpr::Union(a, b))
    }

    pub fn intersect(a: Arc<SetExpr>, b: Arc<SetExpr>) -> Arc<SetExpr> {
        Arc::new(SetExpr::Intersect(a, b))
    }

    pub fn diff(a: Arc<SetExpr>, b: Arc<SetExpr>) -> Arc<SetExpr> {
        Arc::new(SetExpr::Diff(a, b))
    }

    pub fn complement(a: Arc<SetExpr>) -> Arc<SetExpr> {
        Arc::new(SetExpr::Complement(a))
    }

    /// Union of a non-empty list as a balanced tree.
    pub fn union_all(sets: &[Arc<SetExpr>]) -> Arc<SetExpr> {
        match sets.len() {
            0 => Arc::new(SetExpr::Empty),
            1 => sets[0].clone(),
            n => Self::union(Self::union_all(&sets[..n / 2]), Self::union_all(&sets[n / 2..])),
        }
    }

    /// Intersection of a non-empty list as a balanced tree.
    pub fn intersect_all(sets: &[Arc<SetExpr>]) -> Arc<SetExpr> {
        match sets.len() {
            0 => Arc::new(SetExpr::FullLine),
            1 => sets[0].clone(),
            n => Self::intersect(Self::intersect_all(&sets[..n / 2]), Self::intersect_all(&sets[n / 2..])),
        }
    }

    pub fn contains(&self, t: f64) -> Result<bool> {
        if !t.is_finite() {
            return Err(Error::NonFiniteTime(t));
        }
        Ok(match self {
            SetExpr::Level { expr, threshold, relation } => relation.holds(expr.eval_scalar(t)?, *threshold),
            SetExpr::Union(a, b) => a.contains(t)? || b.contains(t)?,
            SetExpr::Intersect(a, b) => a.contains(t)? && b.contains(t)?,
            SetExpr::Diff(a, b) => a.contains(t)? && !b.contains(t)?,
            SetExpr::Complement(a) => !a.contains(t)?,
            SetExpr::FullLine => true,
            SetExpr::Empty => false,
        })
    }

    /// Membership with results of shared subtrees cached by node address.
    /// The memo must only be reused for the same `t`.
    pub fn contains_memo(self: &Arc<Self>, t: f64, memo: &mut HashMap<usize, bool>) -> Result<bool> {
        let key = Arc::as_ptr(self) as usize;
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        let v = match &**self {
            SetExpr::Union(a, b) => a.contains_memo(t, memo)? || b.contains_memo(t, memo)?,
            SetExpr::Intersect(a, b) => a.contains_memo(t, memo)? && b.contains_memo(t, memo)?,
            SetExpr::Diff(a, b) => a.contains_memo(t, memo)? && !b.contains_memo(t, memo)?,
            SetExpr::Complement(a) => !a.contains_memo(t, memo)?,
            other => other.contains(t)?,
        };
        memo.insert(key, v);
        Ok(v)
    }

    /// Membership of every time of a span.
    pub fn contains_span(&self, span: Span, out: &mut [bool]) -> Result<()> {
        match self {
            SetExpr::Level { expr, threshold, relation } => {
                let mut vals = vec![0.0; span.len];
                expr.eval_span(span, &mut vals)?;
                for (o, v) in out.iter_mut().zip(vals) {
                    if !v.is_finite() {
                        return Err(Error::NonFiniteValue(span.t0));
                    }
                    *o = relation.holds(v, *threshold);
                }
            }
            SetExpr::Union(a, b) | SetExpr::Intersect(a, b) | SetExpr::Diff(a, b) => {
                a.contains_span(span, out)?;
                let mut other = vec![false; span.len];
                b.contains_span(span, &mut other)?;
                for (o, x) in out.iter_mut().zip(other) {
                    *o = match self {
                        SetExpr::Union(..) => *o || x,
                        SetExpr::Intersect(..) => *o && x,
                        _ => *o && !x,
                    };
                }
            }
            SetExpr::Complement(a) => {
                a.contains_span(span, out)?;
                for o in out.iter_mut() {
                    *o = !*o;
                }
            }
            SetExpr::FullLine => out.fill(true),
            SetExpr::Empty => out.fill(false),
        }
        Ok(())
    }

    /// Visits every level-set expression (shared subtrees are visited once
    /// per occurrence).
    pub fn visit_exprs(&self, f: &mut dyn FnMut(&FuncExpr) -> Result<()>) -> Result<()> {
        match self {
            SetExpr::Level { expr, .. } => f(expr),
            SetExpr::Union(a, b) | SetExpr::Intersect(a, b) | SetExpr::Diff(a, b) => {
                a.visit_exprs(f)?;
                b.visit_exprs(f)
            }
            SetExpr::Complement(a) => a.visit_exprs(f),
            SetExpr::FullLine | SetExpr::Empty => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq::FrequencyBasis;

    fn sin_level(threshold: f64) -> Arc<SetExpr> {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let s = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        Arc::new(SetExpr::level(s, threshold, Relation::Le).unwrap())
    }

    #[test]
    fn boolean_algebra() {
        let a = sin_level(0.0);
        let b = sin_level(0.5);
        let u = SetExpr::union(a.clone(), b.clone());
        let d = SetExpr::diff(b.clone(), a.clone());
        let c = SetExpr::complement(a.clone());
        for k in 0..100 {
            let t = k as f64 * 0.37 - 15.0;
            let (x, y) = (a.contains(t).unwrap(), b.contains(t).unwrap());
            assert_eq!(u.contains(t).unwrap(), x || y);
            assert_eq!(d.contains(t).unwrap(), y && !x);
            assert_eq!(c.contains(t).unwrap(), !x);
            let mut memo = HashMap::new();
            assert_eq!(d.contains_memo(t, &mut memo).unwrap(), y && !x);
        }
    }

    #[test]
    fn span_membership_matches_points() {
        let a = SetExpr::intersect(sin_level(0.3), SetExpr::complement(sin_level(-0.3)));
        let span = Span { t0: 0.5 / 64.0, step: 1.0 / 64.0, len: 256 };
        let mut out = vec![false; 256];
        a.contains_span(span, &mut out).unwrap();
        let mismatches = (0..256).filter(|&k| out[k] != a.contains(span.time(k)).unwrap()).count();
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn level_requires_scalar() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let v = FuncExpr::constant(&b, &[1.0, 2.0]).unwrap();
        assert!(SetExpr::level(v, 0.0, Relation::Lt).is_err());
    }

    #[test]
    fn balanced_union_of_many() {
        let sets: Vec<_> = (0..9).map(|k| sin_level(-0.9 + 0.1 * k as f64)).collect();
        let u = SetExpr::union_all(&sets);
        assert!(u.contains(-std::f64::consts::FRAC_PI_2).unwrap());
        assert!(!u.contains(std::f64::consts::FRAC_PI_2).unwrap());
    }
}
