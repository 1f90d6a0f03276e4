//! Function expressions `R -> R^d`.
//!
//! Leaves are trigonometric polynomials over a shared frequency basis; inner
//! nodes are shifts, truncations, sign maps, sums, scalar products, step
//! compositions over measurable partitions, perturbed sums, point distances
//! and stacked products.

mod bounds;
mod eval;
mod trig;

use std::fmt;
use std::sync::Arc;

pub use eval::Span;
pub(crate) use eval::truncate_in_place;
pub use trig::{TrigBuilder, TrigPoly, TrigTerm};

use crate::error::{Error, Result};
use crate::freq::{FrequencyBasis, FrequencyModule};
use crate::perturb::PerturbationSeries;
use crate::sets::SetExpr;
use crate::space::PointMetric;

/// Fast branch lookup for step compositions whose partition has known
/// structure. Implementations must agree with scanning the partition in order.
pub trait BranchLocator: Send + Sync {
    fn branch(&self, t: f64) -> Result<Option<usize>>;
}

#[derive(Clone)]
pub struct StepCompose {
    pub sets: Vec<Arc<SetExpr>>,
    pub branches: Vec<FuncExpr>,
    pub locator: Option<Arc<dyn BranchLocator>>,
}

impl fmt::Debug for StepCompose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepCompose")
            .field("sets", &self.sets)
            .field("branches", &self.branches)
            .field("indexed", &self.locator.is_some())
            .finish()
    }
}

impl PartialEq for StepCompose {
    fn eq(&self, other: &Self) -> bool {
        self.sets == other.sets && self.branches == other.branches
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Trig(TrigPoly),
    Step(StepCompose),
    Shift { inner: FuncExpr, tau: f64 },
    Truncate { inner: FuncExpr, radius: f64 },
    Sgn(FuncExpr),
    Sum(FuncExpr, FuncExpr),
    ScalarProd { scalar: FuncExpr, vector: FuncExpr },
    Perturbed { inner: FuncExpr, series: Arc<PerturbationSeries> },
    Dist { inner: FuncExpr, point: Vec<f64>, metric: PointMetric },
    Stack(Vec<FuncExpr>),
}

/// Cheaply clonable handle to an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncExpr {
    node: Arc<Node>,
    dim: usize,
}

impl FuncExpr {
    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ptr_eq(&self, other: &FuncExpr) -> bool {
        Arc::ptr_eq(&self.node, &other.node)
    }

    pub fn trig(p: TrigPoly) -> Self {
        let dim = p.dim();
        FuncExpr { node: Arc::new(Node::Trig(p)), dim }
    }

    pub fn constant(basis: &Arc<FrequencyBasis>, values: &[f64]) -> Result<Self> {
        Ok(Self::trig(TrigBuilder::new(basis.clone(), values.len()).constant(values).build()?))
    }

    /// `amp * sin(lambda t)` with `lambda` given by `freq` over `basis`.
    pub fn sin(basis: &Arc<FrequencyBasis>, freq: &[i64], amp: f64) -> Result<Self> {
        Ok(Self::trig(TrigBuilder::new(basis.clone(), 1).sin(0, freq, amp).build()?))
    }

    pub fn cos(basis: &Arc<FrequencyBasis>, freq: &[i64], amp: f64) -> Result<Self> {
        Ok(Self::trig(TrigBuilder::new(basis.clone(), 1).cos(0, freq, amp).build()?))
    }

    /// `sum_k branches[k] * 1_{sets[k]}`. Sets are expected to be disjoint;
    /// each time is routed to the first set containing it and to branch 0
    /// (flagged as a gap) when no set does.
    pub fn step(sets: Vec<Arc<SetExpr>>, branches: Vec<FuncExpr>, locator: Option<Arc<dyn BranchLocator>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::invalid("step composition needs at least one branch"));
        }
        if sets.len() != branches.len() {
            return Err(Error::invalid("step composition needs one set per branch"));
        }
        let dim = branches[0].dim;
        for b in &branches {
            if b.dim != dim {
                return Err(Error::DimMismatch { expected: dim, found: b.dim });
            }
        }
        let node = Node::Step(StepCompose { sets, branches, locator });
        Ok(FuncExpr { node: Arc::new(node), dim })
    }

    /// `t -> f(t + tau)`.
    pub fn shift(&self, tau: f64) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::invalid("shift must be finite"));
        }
        Ok(FuncExpr { node: Arc::new(Node::Shift { inner: self.clone(), tau }), dim: self.dim })
    }

    /// Radial truncation to the closed ball of radius `a`.
    pub fn truncate(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid("truncation radius must be positive"));
        }
        Ok(FuncExpr { node: Arc::new(Node::Truncate { inner: self.clone(), radius: a }), dim: self.dim })
    }

    /// `h / |h|`, with value 0 where `h = 0`.
    pub fn sgn(&self) -> Self {
        FuncExpr { node: Arc::new(Node::Sgn(self.clone())), dim: self.dim }
    }

    pub fn add(&self, other: &FuncExpr) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: other.dim });
        }
        Ok(FuncExpr { node: Arc::new(Node::Sum(self.clone(), other.clone())), dim: self.dim })
    }

    /// Pointwise product of a scalar expression with a vector expression.
    pub fn scalar_prod(scalar: &FuncExpr, vector: &FuncExpr) -> Result<Self> {
        if scalar.dim != 1 {
            return Err(Error::DimMismatch { expected: 1, found: scalar.dim });
        }
        let node = Node::ScalarProd { scalar: scalar.clone(), vector: vector.clone() };
        Ok(FuncExpr { node: Arc::new(node), dim: vector.dim })
    }

    pub fn perturbed(&self, series: Arc<PerturbationSeries>) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::DimMismatch { expected: 1, found: self.dim });
        }
        Ok(FuncExpr { node: Arc::new(Node::Perturbed { inner: self.clone(), series }), dim: 1 })
    }

    /// `t -> rho(f(t), point)`.
    pub fn dist_to(&self, point: &[f64], metric: PointMetric) -> Result<Self> {
        if point.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, found: point.len() });
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("distance anchor must be finite"));
        }
        metric.validate(self.dim)?;
        let node = Node::Dist { inner: self.clone(), point: point.to_vec(), metric };
        Ok(FuncExpr { node: Arc::new(node), dim: 1 })
    }

    /// The product map `t -> (f_1(t), ..., f_n(t))`.
    pub fn stack(parts: Vec<FuncExpr>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("stack needs at least one part"));
        }
        let dim = parts.iter().map(|p| p.dim).sum();
        Ok(FuncExpr { node: Arc::new(Node::Stack(parts)), dim })
    }

    /// The constant value if the expression is a constant polynomial.
    pub fn constant_value(&self) -> Option<Vec<f64>> {
        match &*self.node {
            Node::Trig(p) => p.constant_value(),
            _ => None,
        }
    }

    /// The frequency basis shared by all polynomial leaves.
    pub fn basis(&self) -> Result<Arc<FrequencyBasis>> {
        let mut found: Option<Arc<FrequencyBasis>> = None;
        self.visit_bases(&mut |b| match &found {
            None => {
                found = Some(b.clone());
                Ok(())
            }
            Some(f) if Arc::ptr_eq(f, b) || **f == **b => Ok(()),
            Some(_) => Err(Error::MixedBases),
        })?;
        found.ok_or_else(|| Error::invalid("expression has no polynomial leaf"))
    }

    fn visit_bases(&self, f: &mut dyn FnMut(&Arc<FrequencyBasis>) -> Result<()>) -> Result<()> {
        match &*self.node {
            Node::Trig(p) => f(p.basis()),
            Node::Step(s) => {
                for set in &s.sets {
                    set.visit_exprs(&mut |e| e.visit_bases(f))?;
                }
                s.branches.iter().try_for_each(|b| b.visit_bases(f))
            }
            Node::Shift { inner, .. }
            | Node::Truncate { inner, .. }
            | Node::Sgn(inner)
            | Node::Dist { inner, .. } => inner.visit_bases(f),
            Node::Perturbed { inner, series } => {
                if let Some((basis, _)) = series.lattice() {
                    f(basis)?;
                }
                inner.visit_bases(f)
            }
            Node::Sum(a, b) => {
                a.visit_bases(f)?;
                b.visit_bases(f)
            }
            Node::ScalarProd { scalar, vector } => {
                scalar.visit_bases(f)?;
                vector.visit_bases(f)
            }
            Node::Stack(parts) => parts.iter().try_for_each(|p| p.visit_bases(f)),
        }
    }

    /// A frequency module containing every frequency of the expression.
    ///
    /// For polynomials this is generated by the frequencies present; sums,
    /// products and stacks add modules; shifts and pointwise maps keep the
    /// module of their argument; step compositions collect the modules of
    /// their level-set functions and branches.
    pub fn freq_module(&self) -> Result<FrequencyModule> {
        let basis = self.basis()?;
        self.module_in(&basis)
    }

    fn module_in(&self, basis: &Arc<FrequencyBasis>) -> Result<FrequencyModule> {
        match &*self.node {
            Node::Trig(p) => FrequencyModule::new(basis.clone(), p.nonzero_frequencies()),
            Node::Step(s) => {
                let mut m = FrequencyModule::zero(basis.clone());
                for set in &s.sets {
                    set.visit_exprs(&mut |e| {
                        m = m.sum(&e.module_in(basis)?)?;
                        Ok(())
                    })?;
                }
                for b in &s.branches {
                    m = m.sum(&b.module_in(basis)?)?;
                }
                Ok(m)
            }
            Node::Shift { inner, .. }
            | Node::Truncate { inner, .. }
            | Node::Sgn(inner)
            | Node::Dist { inner, .. } => inner.module_in(basis),
            Node::Perturbed { inner, series } => {
                let m = inner.module_in(basis)?;
                match series.lattice() {
                    Some((_, g)) => m.with_generator(g.clone()),
                    None => Err(Error::invalid("perturbation series has no lattice generator")),
                }
            }
            Node::Sum(a, b) => a.module_in(basis)?.sum(&b.module_in(basis)?),
            Node::ScalarProd { scalar, vector } => scalar.module_in(basis)?.sum(&vector.module_in(basis)?),
            Node::Stack(parts) => {
                let mut m = FrequencyModule::zero(basis.clone());
                for p in parts {
                    m = m.sum(&p.module_in(basis)?)?;
                }
                Ok(m)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> Arc<FrequencyBasis> {
        Arc::new(FrequencyBasis::new(vec![1.0, 2f64.sqrt()]).unwrap())
    }

    #[test]
    fn module_of_sum_and_shift() {
        let b = basis();
        let f = FuncExpr::sin(&b, &[1, 0], 1.0).unwrap().add(&FuncExpr::sin(&b, &[0, 1], 1.0).unwrap()).unwrap();
        let m = f.shift(0.7).unwrap().truncate(0.5).unwrap().freq_module().unwrap();
        assert!(m.contains(&[1, 0]).unwrap());
        assert!(m.contains(&[3, -2]).unwrap());
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn constants_have_zero_module() {
        let b = basis();
        let c = FuncExpr::constant(&b, &[3.0]).unwrap();
        assert!(c.freq_module().unwrap().is_zero());
        assert_eq!(c.constant_value(), Some(vec![3.0]));
    }

    #[test]
    fn mixed_bases_are_rejected() {
        let b1 = basis();
        let b2 = Arc::new(FrequencyBasis::new(vec![1.0, 3f64.sqrt()]).unwrap());
        let f = FuncExpr::sin(&b1, &[1, 0], 1.0).unwrap().add(&FuncExpr::sin(&b2, &[0, 1], 1.0).unwrap()).unwrap();
        assert_eq!(f.freq_module(), Err(Error::MixedBases));
    }

    #[test]
    fn constructor_validation() {
        let b = basis();
        let f = FuncExpr::sin(&b, &[1, 0], 1.0).unwrap();
        assert!(f.truncate(0.0).is_err());
        assert!(f.shift(f64::NAN).is_err());
        assert!(f.dist_to(&[0.0, 0.0], PointMetric::Euclidean).is_err());
        let v = FuncExpr::stack(vec![f.clone(), f.clone()]).unwrap();
        assert!(FuncExpr::scalar_prod(&v, &f).is_err());
        assert!(v.perturbed(Arc::new(PerturbationSeries::single(0.1, 2.0).unwrap())).is_err());
    }
}
