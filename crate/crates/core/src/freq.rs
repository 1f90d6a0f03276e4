//! Frequency bases and the integer modules they generate.
//!
//! A frequency is an integer vector `v` over a basis `(beta_1, ..., beta_m)` and
//! stands for the real number `sum v_i beta_i`. Module membership is decided
//! exactly with an integer echelon form, never with floating point.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBasis {
    reals: Vec<f64>,
    independent: bool,
    dependent_pairs: Vec<(usize, usize)>,
    scale: Option<(i64, u64)>,
}

impl FrequencyBasis {
    /// A basis declared linearly independent over the rationals.
    pub fn new(reals: Vec<f64>) -> Result<Self> {
        Self::with_flags(reals, true, Vec::new())
    }

    /// Independence cannot be decided numerically, so it is taken from the
    /// caller; pairs known to be rationally dependent may be flagged and are
    /// rejected when the basis claims independence.
    pub fn with_flags(reals: Vec<f64>, independent: bool, dependent_pairs: Vec<(usize, usize)>) -> Result<Self> {
        if reals.is_empty() {
            return Err(Error::invalid("frequency basis is empty"));
        }
        for (i, &r) in reals.iter().enumerate() {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(format!("basis element {i} must be a positive finite real")));
            }
        }
        for i in 0..reals.len() {
            for j in 0..i {
                if reals[i] == reals[j] {
                    return Err(Error::invalid(format!("basis elements {j} and {i} coincide")));
                }
            }
        }
        for &(i, j) in &dependent_pairs {
            if i >= reals.len() || j >= reals.len() || i == j {
                return Err(Error::invalid(format!("dependent pair ({i}, {j}) is out of range")));
            }
        }
        if independent && !dependent_pairs.is_empty() {
            return Err(Error::invalid("basis is declared independent but has flagged dependent pairs"));
        }
        Ok(FrequencyBasis { reals, independent, dependent_pairs, scale: None })
    }

    /// Multiplies every basis element by the rational `num / den`.
    pub fn with_scale(mut self, num: i64, den: u64) -> Result<Self> {
        if num <= 0 || den == 0 {
            return Err(Error::invalid("rational scale must be positive"));
        }
        self.scale = Some((num, den));
        Ok(self)
    }

    pub fn rank(&self) -> usize {
        self.reals.len()
    }

    pub fn reals(&self) -> &[f64] {
        &self.reals
    }

    pub fn independent(&self) -> bool {
        self.independent
    }

    pub fn dependent_pairs(&self) -> &[(usize, usize)] {
        &self.dependent_pairs
    }

    pub fn scale(&self) -> Option<(i64, u64)> {
        self.scale
    }

    /// The real value of basis element `i`, including the rational scale.
    pub fn element(&self, i: usize) -> f64 {
        match self.scale {
            Some((n, d)) => self.reals[i] * n as f64 / d as f64,
            None => self.reals[i],
        }
    }

    pub fn check(&self, v: &[i64]) -> Result<()> {
        if v.len() != self.rank() {
            return Err(Error::BasisMismatch { expected: self.rank(), found: v.len() });
        }
        Ok(())
    }

    /// The real frequency `sum v_i beta_i`.
    pub fn frequency(&self, v: &[i64]) -> Result<f64> {
        self.check(v)?;
        Ok(v.iter().enumerate().map(|(i, &c)| c as f64 * self.element(i)).sum())
    }
}

/// The subgroup of `Z^m` generated by a list of integer vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyModule {
    basis: Arc<FrequencyBasis>,
    generators: Vec<Vec<i64>>,
    echelon: Vec<(usize, Vec<i128>)>,
}

impl FrequencyModule {
    pub fn zero(basis: Arc<FrequencyBasis>) -> Self {
        FrequencyModule { basis, generators: Vec::new(), echelon: Vec::new() }
    }

    /// Zero vectors are dropped; duplicates are kept in the generator list but
    /// do not affect membership.
    pub fn new(basis: Arc<FrequencyBasis>, generators: Vec<Vec<i64>>) -> Result<Self> {
        let mut kept = Vec::with_capacity(generators.len());
        for g in generators {
            basis.check(&g)?;
            if g.iter().any(|&c| c != 0) && !kept.contains(&g) {
                kept.push(g);
            }
        }
        let echelon = echelon_form(basis.rank(), &kept)?;
        Ok(FrequencyModule { basis, generators: kept, echelon })
    }

    pub fn basis(&self) -> &Arc<FrequencyBasis> {
        &self.basis
    }

    pub fn generators(&self) -> &[Vec<i64>] {
        &self.generators
    }

    pub fn is_zero(&self) -> bool {
        self.echelon.is_empty()
    }

    /// Rank of the module as a free abelian group.
    pub fn rank(&self) -> usize {
        self.echelon.len()
    }

    pub fn same_basis(&self, other: &FrequencyModule) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis
    }

    pub fn contains(&self, v: &[i64]) -> Result<bool> {
        self.basis.check(v)?;
        let mut w: Vec<i128> = v.iter().map(|&c| c as i128).collect();
        let mut col = 0;
        for (pivot, row) in &self.echelon {
            while col < *pivot {
                if w[col] != 0 {
                    return Ok(false);
                }
                col += 1;
            }
            let p = row[*pivot];
            if w[*pivot] % p != 0 {
                return Ok(false);
            }
            let q = w[*pivot] / p;
            if q != 0 {
                for k in *pivot..w.len() {
                    let prod = q.checked_mul(row[k]).ok_or(Error::ModuleOverflow)?;
                    w[k] = w[k].checked_sub(prod).ok_or(Error::ModuleOverflow)?;
                }
            }
            col = pivot + 1;
        }
        Ok(w[col.min(w.len())..].iter().all(|&c| c == 0))
    }

    /// True when every generator of `other` lies in `self`.
    pub fn contains_module(&self, other: &FrequencyModule) -> Result<bool> {
        if !other.same_basis(self) {
            return Err(Error::MixedBases);
        }
        for g in &other.generators {
            if !self.contains(g)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn sum(&self, other: &FrequencyModule) -> Result<FrequencyModule> {
        if !self.same_basis(other) {
            return Err(Error::MixedBases);
        }
        let mut gens = self.generators.clone();
        gens.extend(other.generators.iter().cloned());
        FrequencyModule::new(self.basis.clone(), gens)
    }

    pub fn with_generator(&self, g: Vec<i64>) -> Result<FrequencyModule> {
        let mut gens = self.generators.clone();
        gens.push(g);
        FrequencyModule::new(self.basis.clone(), gens)
    }

    /// Real values of the generators.
    pub fn generator_values(&self) -> Vec<f64> {
        self.generators.iter().map(|g| self.basis.frequency(g).unwrap_or(f64::NAN)).collect()
    }
}

fn echelon_form(m: usize, generators: &[Vec<i64>]) -> Result<Vec<(usize, Vec<i128>)>> {
    let mut rows: Vec<Vec<i128>> =
        generators.iter().map(|g| g.iter().map(|&c| c as i128).collect()).collect();
    let mut out = Vec::new();
    for col in 0..m {
        loop {
            // Euclid on the column: keep the smallest nonzero entry as pivot.
            let mut best: Option<usize> = None;
            for (i, r) in rows.iter().enumerate() {
                if r[col] != 0 && best.is_none_or(|b| r[col].abs() < rows[b][col].abs()) {
                    best = Some(i);
                }
            }
            let Some(b) = best else { break };
            let pivot_row = rows.swap_remove(b);
            let p = pivot_row[col];
            let mut done = true;
            for r in rows.iter_mut() {
                if r[col] != 0 {
                    let q = r[col] / p;
                    for k in col..m {
                        let prod = q.checked_mul(pivot_row[k]).ok_or(Error::ModuleOverflow)?;
                        r[k] = r[k].checked_sub(prod).ok_or(Error::ModuleOverflow)?;
                    }
                    if r[col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                let sign = if p < 0 { -1 } else { 1 };
                out.push((col, pivot_row.into_iter().map(|c| c * sign).collect()));
                rows.retain(|r| r.iter().any(|&c| c != 0));
                break;
            }
            rows.push(pivot_row);
        }
    }
    Ok(out)
}
