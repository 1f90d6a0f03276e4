//! JSON-facing descriptions of bases, expressions, sets, spaces and schemes.
//!
//! Expressions are trees tagged by `"op"`. Every leaf refers to one shared
//! frequency basis, given as a list of numbers or named constants such as
//! `"pi"` or `"sqrt(2)"`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{FuncExpr, TrigBuilder};
use crate::freq::FrequencyBasis;
use crate::metrics::AveragingScheme;
use crate::sets::{Relation, SetExpr};
use crate::space::{MetricKind, MetricSpace, PointMetric};

/// A real number written either as a JSON number or a named constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealSpec {
    Number(f64),
    Named(String),
}

impl RealSpec {
    pub fn value(&self) -> Result<f64> {
        match self {
            RealSpec::Number(x) => Ok(*x),
            RealSpec::Named(s) => parse_real(s),
        }
    }
}

/// Parses `pi`, `tau`, `e`, `sqrt(x)`, plain decimals and products of these
/// joined by `*`, e.g. `"2*pi"` or `"sqrt(2)"`.
pub fn parse_real(s: &str) -> Result<f64> {
    let bad = || Error::invalid(format!("cannot parse real constant {s:?}"));
    let mut acc = 1.0;
    for factor in s.split('*') {
        let f = factor.trim();
        let v = match f {
            "pi" => std::f64::consts::PI,
            "tau" => std::f64::consts::TAU,
            "e" => std::f64::consts::E,
            _ => {
                if let Some(inner) = f.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
                    let x: f64 = inner.trim().parse().map_err(|_| bad())?;
                    if x < 0.0 {
                        return Err(bad());
                    }
                    x.sqrt()
                } else {
                    f.parse().map_err(|_| bad())?
                }
            }
        };
        acc *= v;
    }
    if !acc.is_finite() {
        return Err(bad());
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub reals: Vec<RealSpec>,
    #[serde(default)]
    pub dependent_pairs: Vec<(usize, usize)>,
}

impl BasisSpec {
    pub fn build(&self) -> Result<Arc<FrequencyBasis>> {
        let reals = self.reals.iter().map(RealSpec::value).collect::<Result<Vec<_>>>()?;
        let independent = self.dependent_pairs.is_empty();
        Ok(Arc::new(FrequencyBasis::with_flags(reals, independent, self.dependent_pairs.clone())?))
    }
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub kind: TermKind,
    pub freq: Vec<i64>,
    #[serde(default = "one")]
    pub amp: f64,
    #[serde(default)]
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExprSpec {
    Constant {
        value: Vec<f64>,
    },
    Sin {
        freq: Vec<i64>,
        #[serde(default = "one")]
        amp: f64,
    },
    Cos {
        freq: Vec<i64>,
        #[serde(default = "one")]
        amp: f64,
    },
    Trig {
        #[serde(default = "one_usize")]
        dim: usize,
        terms: Vec<TermSpec>,
        #[serde(default)]
        constant: Option<Vec<f64>>,
    },
    Shift {
        of: Box<ExprSpec>,
        tau: RealSpec,
    },
    Truncate {
        of: Box<ExprSpec>,
        radius: f64,
    },
    Sgn {
        of: Box<ExprSpec>,
    },
    Sum {
        of: Vec<ExprSpec>,
    },
    ScalarProd {
        scalar: Box<ExprSpec>,
        vector: Box<ExprSpec>,
    },
    Stack {
        of: Vec<ExprSpec>,
    },
    Dist {
        of: Box<ExprSpec>,
        point: Vec<f64>,
        #[serde(default)]
        metric: Option<MetricKind>,
    },
    Step {
        sets: Vec<SetSpec>,
        branches: Vec<ExprSpec>,
    },
}

impl ExprSpec {
    pub fn build(&self, basis: &Arc<FrequencyBasis>) -> Result<FuncExpr> {
        match self {
            ExprSpec::Constant { value } => FuncExpr::constant(basis, value),
            ExprSpec::Sin { freq, amp } => FuncExpr::sin(basis, freq, *amp),
            ExprSpec::Cos { freq, amp } => FuncExpr::cos(basis, freq, *amp),
            ExprSpec::Trig { dim, terms, constant } => {
                if *dim == 0 {
                    return Err(Error::invalid("trig dimension must be positive"));
                }
                let mut b = TrigBuilder::new(basis.clone(), *dim);
                for t in terms {
                    if t.component >= *dim {
                        return Err(Error::invalid(format!("term component {} out of range", t.component)));
                    }
                    b = match t.kind {
                        TermKind::Sin => b.sin(t.component, &t.freq, t.amp),
                        TermKind::Cos => b.cos(t.component, &t.freq, t.amp),
                    };
                }
                if let Some(c) = constant {
                    if c.len() != *dim {
                        return Err(Error::DimMismatch { expected: *dim, found: c.len() });
                    }
                    b = b.constant(c);
                }
                Ok(FuncExpr::trig(b.build()?))
            }
            ExprSpec::Shift { of, tau } => of.build(basis)?.shift(tau.value()?),
            ExprSpec::Truncate { of, radius } => of.build(basis)?.truncate(*radius),
            ExprSpec::Sgn { of } => Ok(of.build(basis)?.sgn()),
            ExprSpec::Sum { of } => {
                let (first, rest) = of.split_first().ok_or_else(|| Error::invalid("empty sum"))?;
                let mut acc = first.build(basis)?;
                for e in rest {
                    acc = acc.add(&e.build(basis)?)?;
                }
                Ok(acc)
            }
            ExprSpec::ScalarProd { scalar, vector } => FuncExpr::scalar_prod(&scalar.build(basis)?, &vector.build(basis)?),
            ExprSpec::Stack { of } => FuncExpr::stack(of.iter().map(|e| e.build(basis)).collect::<Result<_>>()?),
            ExprSpec::Dist { of, point, metric } => {
                let m = match metric.unwrap_or(MetricKind::Euclidean) {
                    MetricKind::Euclidean => PointMetric::Euclidean,
                    MetricKind::Capped => PointMetric::Capped,
                };
                of.build(basis)?.dist_to(point, m)
            }
            ExprSpec::Step { sets, branches } => {
                let sets = sets.iter().map(|s| s.build(basis)).collect::<Result<_>>()?;
                let branches = branches.iter().map(|e| e.build(basis)).collect::<Result<_>>()?;
                FuncExpr::step(sets, branches, None)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Level { of: ExprSpec, threshold: f64, relation: Relation },
    Union { of: Vec<SetSpec> },
    Intersect { of: Vec<SetSpec> },
    Diff { left: Box<SetSpec>, right: Box<SetSpec> },
    Complement { of: Box<SetSpec> },
    FullLine,
    Empty,
}

impl SetSpec {
    pub fn build(&self, basis: &Arc<FrequencyBasis>) -> Result<Arc<SetExpr>> {
        Ok(match self {
            SetSpec::Level { of, threshold, relation } => Arc::new(SetExpr::level(of.build(basis)?, *threshold, *relation)?),
            SetSpec::Union { of } => {
                SetExpr::union_all(&of.iter().map(|s| s.build(basis)).collect::<Result<Vec<_>>>()?)
            }
            SetSpec::Intersect { of } => {
                SetExpr::intersect_all(&of.iter().map(|s| s.build(basis)).collect::<Result<Vec<_>>>()?)
            }
            SetSpec::Diff { left, right } => SetExpr::diff(left.build(basis)?, right.build(basis)?),
            SetSpec::Complement { of } => SetExpr::complement(of.build(basis)?),
            SetSpec::FullLine => Arc::new(SetExpr::FullLine),
            SetSpec::Empty => Arc::new(SetExpr::Empty),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub dim: usize,
    pub metric: MetricKind,
    #[serde(default)]
    pub base_point: Option<Vec<f64>>,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<MetricSpace> {
        let base = self.base_point.clone().unwrap_or_else(|| vec![0.0; self.dim]);
        MetricSpace::new(self.dim, self.metric, base)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub b_list: Vec<f64>,
    pub step: f64,
    pub window: usize,
}

impl SchemeSpec {
    pub fn build(&self) -> Result<AveragingScheme> {
        AveragingScheme::new(self.b_list.clone(), self.step, self.window)
    }
}

impl From<&AveragingScheme> for SchemeSpec {
    fn from(s: &AveragingScheme) -> Self {
        SchemeSpec { b_list: s.b_list().to_vec(), step: s.step(), window: s.window() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_reals() {
        assert_eq!(parse_real("pi").unwrap(), std::f64::consts::PI);
        assert_eq!(parse_real("sqrt(2)").unwrap(), 2f64.sqrt());
        assert_eq!(parse_real("2*pi").unwrap(), std::f64::consts::TAU);
        assert_eq!(parse_real("0.5").unwrap(), 0.5);
        assert!(parse_real("sqrt(-1)").is_err());
        assert!(parse_real("phi").is_err());
    }

    #[test]
    fn expression_tree_round_trip() {
        let json = r#"{"op": "sum", "of": [
            {"op": "sin", "freq": [1, 0]},
            {"op": "trig", "terms": [{"kind": "sin", "freq": [0, 1]}]},
            {"op": "dist", "of": {"op": "cos", "freq": [1, 0], "amp": 2.0}, "point": [0.0]}
        ]}"#;
        let spec: ExprSpec = serde_json::from_str(json).unwrap();
        let basis = BasisSpec { reals: vec![RealSpec::Number(1.0), RealSpec::Named("sqrt(2)".into())], dependent_pairs: vec![] }
            .build()
            .unwrap();
        let f = spec.build(&basis).unwrap();
        let t: f64 = 0.7;
        let want = t.sin() + (2f64.sqrt() * t).sin() + (2.0 * t.cos()).abs();
        assert!((f.eval_scalar(t).unwrap() - want).abs() < 1e-14);
        let again: ExprSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<ExprSpec>(r#"{"op": "sin", "freq": [1], "phase": 1}"#).is_err());
        assert!(serde_json::from_str::<SchemeSpec>(r#"{"b_list": [1], "step": 0.1, "window": 1, "x": 0}"#).is_err());
    }

    #[test]
    fn step_from_sets() {
        let basis = BasisSpec { reals: vec![RealSpec::Number(1.0)], dependent_pairs: vec![] }.build().unwrap();
        let json = r#"{"op": "step",
            "sets": [{"op": "level", "of": {"op": "sin", "freq": [1]}, "threshold": 0.0, "relation": "le"},
                     {"op": "complement", "of": {"op": "level", "of": {"op": "sin", "freq": [1]}, "threshold": 0.0, "relation": "le"}}],
            "branches": [{"op": "constant", "value": [-1.0]}, {"op": "constant", "value": [1.0]}]}"#;
        let f = serde_json::from_str::<ExprSpec>(json).unwrap().build(&basis).unwrap();
        assert_eq!(f.eval_scalar(1.0).unwrap(), 1.0);
        assert_eq!(f.eval_scalar(-1.0).unwrap(), -1.0);
    }

    #[test]
    fn space_defaults() {
        let s: SpaceSpec = serde_json::from_str(r#"{"dim": 2, "metric": "capped"}"#).unwrap();
        assert_eq!(s.build().unwrap(), MetricSpace::capped(2));
    }
}
