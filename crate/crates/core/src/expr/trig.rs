use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::freq::FrequencyBasis;

const CONJ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm {
    pub coef: Vec<Complex64>,
    pub freq: Vec<i64>,
}

/// `sum_k c_k e^{i lambda_k t}` with `c_k` in `C^d`.
///
/// In real mode the terms must come in conjugate pairs, and the polynomial is
/// evaluated as a real function by folding each pair into `2 Re(c e^{i lambda t})`.
#[derive(Debug, Clone)]
pub struct TrigPoly {
    basis: Arc<FrequencyBasis>,
    dim: usize,
    terms: Vec<TrigTerm>,
    complex: bool,
    // Folded terms used for real evaluation: (lambda, weighted coefficients).
    pub(super) real_kernel: Vec<(f64, Vec<Complex64>)>,
    // All terms, for complex evaluation.
    pub(super) full_kernel: Vec<(f64, Vec<Complex64>)>,
}

impl PartialEq for TrigPoly {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis && self.dim == other.dim && self.terms == other.terms && self.complex == other.complex
    }
}

fn is_positive(v: &[i64]) -> bool {
    v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

impl TrigPoly {
    pub fn new(basis: Arc<FrequencyBasis>, dim: usize, terms: Vec<TrigTerm>, complex: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("polynomial dimension must be positive"));
        }
        for (k, term) in terms.iter().enumerate() {
            basis.check(&term.freq)?;
            if term.coef.len() != dim {
                return Err(Error::DimMismatch { expected: dim, found: term.coef.len() });
            }
            if term.coef.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::invalid(format!("term {k} has a non-finite coefficient")));
            }
            if terms[..k].iter().any(|s| s.freq == term.freq) {
                return Err(Error::invalid(format!("term {k} repeats frequency {:?}", term.freq)));
            }
        }
        let mut full_kernel = Vec::with_capacity(terms.len());
        let mut real_kernel = Vec::new();
        for term in &terms {
            let lambda = basis.frequency(&term.freq)?;
            full_kernel.push((lambda, term.coef.clone()));
            let zero = term.freq.iter().all(|&c| c == 0);
            if !complex {
                if zero {
                    if term.coef.iter().any(|c| c.im.abs() > CONJ_TOL * (1.0 + c.re.abs())) {
                        return Err(Error::invalid("constant term of a real polynomial must be real"));
                    }
                } else {
                    let neg: Vec<i64> = term.freq.iter().map(|c| -c).collect();
                    let partner = terms.iter().find(|s| s.freq == neg);
                    let ok = partner.is_some_and(|p| {
                        p.coef.iter().zip(&term.coef).all(|(a, b)| (a - b.conj()).norm() <= CONJ_TOL * (1.0 + b.norm()))
                    });
                    if !ok {
                        return Err(Error::invalid(format!(
                            "real polynomial lacks the conjugate partner of frequency {:?}",
                            term.freq
                        )));
                    }
                }
            }
            if zero {
                real_kernel.push((lambda, term.coef.clone()));
            } else if complex || is_positive(&term.freq) {
                let w = if complex { 1.0 } else { 2.0 };
                real_kernel.push((lambda, term.coef.iter().map(|c| c * w).collect()));
            }
        }
        Ok(TrigPoly { basis, dim, terms, complex, real_kernel, full_kernel })
    }

    pub fn basis(&self) -> &Arc<FrequencyBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TrigTerm] {
        &self.terms
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    /// `(lambda_k, c_k)` for every term.
    pub(crate) fn full_terms(&self) -> &[(f64, Vec<Complex64>)] {
        &self.full_kernel
    }

    pub(crate) fn nonzero_frequencies(&self) -> Vec<Vec<i64>> {
        self.terms
            .iter()
            .filter(|t| t.coef.iter().any(|c| c.norm() != 0.0))
            .map(|t| t.freq.clone())
            .filter(|f| f.iter().any(|&c| c != 0))
            .collect()
    }

    pub fn constant_value(&self) -> Option<Vec<f64>> {
        let mut value = vec![0.0; self.dim];
        for t in &self.terms {
            let zero = t.freq.iter().all(|&c| c == 0);
            if !zero {
                if t.coef.iter().any(|c| c.norm() != 0.0) {
                    return None;
                }
                continue;
            }
            for (v, c) in value.iter_mut().zip(&t.coef) {
                *v += c.re;
            }
        }
        Some(value)
    }

    /// `sum_k |c_k|`, an upper bound for `sup |p|`.
    pub fn coef_norm_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.coef.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()).sum()
    }

    /// `sum_k |c_k| |lambda_k|`, an upper bound for the Lipschitz constant.
    pub fn lipschitz_bound(&self) -> f64 {
        self.full_kernel
            .iter()
            .map(|(l, c)| l.abs() * c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .sum()
    }
}

/// Accumulates a real polynomial from sine, cosine and exponential terms,
/// adding conjugate partners automatically and merging equal frequencies.
#[derive(Debug, Clone)]
pub struct TrigBuilder {
    basis: Arc<FrequencyBasis>,
    dim: usize,
    acc: BTreeMap<Vec<i64>, Vec<Complex64>>,
    error: Option<Error>,
}

impl TrigBuilder {
    pub fn new(basis: Arc<FrequencyBasis>, dim: usize) -> Self {
        TrigBuilder { basis, dim, acc: BTreeMap::new(), error: None }
    }

    fn add(&mut self, component: usize, freq: Vec<i64>, c: Complex64) {
        if self.error.is_some() {
            return;
        }
        if component >= self.dim {
            self.error = Some(Error::DimMismatch { expected: self.dim, found: component + 1 });
            return;
        }
        if let Err(e) = self.basis.check(&freq) {
            self.error = Some(e);
            return;
        }
        let dim = self.dim;
        self.acc.entry(freq).or_insert_with(|| vec![Complex64::new(0.0, 0.0); dim])[component] += c;
    }

    /// Adds `c e^{i lambda t} + conj(c) e^{-i lambda t}` to one component.
    pub fn exp_pair(mut self, component: usize, freq: &[i64], c: Complex64) -> Self {
        if freq.iter().all(|&x| x == 0) {
            self.add(component, freq.to_vec(), Complex64::new(2.0 * c.re, 0.0));
            return self;
        }
        let neg: Vec<i64> = freq.iter().map(|x| -x).collect();
        self.add(component, freq.to_vec(), c);
        self.add(component, neg, c.conj());
        self
    }

    pub fn sin(self, component: usize, freq: &[i64], amp: f64) -> Self {
        // amp sin(x) = (-i amp / 2) e^{ix} + (i amp / 2) e^{-ix}
        self.exp_pair(component, freq, Complex64::new(0.0, -amp / 2.0))
    }

    pub fn cos(self, component: usize, freq: &[i64], amp: f64) -> Self {
        self.exp_pair(component, freq, Complex64::new(amp / 2.0, 0.0))
    }

    pub fn constant(mut self, values: &[f64]) -> Self {
        if values.len() != self.dim {
            self.error.get_or_insert(Error::DimMismatch { expected: self.dim, found: values.len() });
            return self;
        }
        let zero = vec![0i64; self.basis.rank()];
        for (i, &v) in values.iter().enumerate() {
            self.add(i, zero.clone(), Complex64::new(v, 0.0));
        }
        self
    }

    pub fn build(self) -> Result<TrigPoly> {
        if let Some(e) = self.error {
            return Err(e);
        }
        let mut terms: Vec<TrigTerm> =
            self.acc.into_iter().map(|(freq, coef)| TrigTerm { coef, freq }).collect();
        if terms.is_empty() {
            let zero = vec![0i64; self.basis.rank()];
            terms.push(TrigTerm { coef: vec![Complex64::new(0.0, 0.0); self.dim], freq: zero });
        }
        TrigPoly::new(self.basis, self.dim, terms, false)
    }
}
