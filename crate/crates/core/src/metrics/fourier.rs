use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::Grid;
use super::AveragingScheme;
use crate::error::{Error, Result};
use crate::expr::{FuncExpr, Node, Span};

/// Estimate of `lim (1/2b) int_{-b}^{b} f(t) e^{-i lambda t} dt` on the widest
/// horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierBohr {
    pub lambda: f64,
    pub value: Vec<Complex64>,
    /// `2 / b_max`, the nominal accuracy for polynomials whose frequencies
    /// are well separated from `lambda`.
    pub nominal_bound: Option<f64>,
    /// Rigorous bound on the contribution of the other terms of a polynomial
    /// to the discrete average: `sum_k |c_k| min(1, 1 / (2n |sin((mu_k - lambda) h / 2)|))`.
    pub leakage_bound: Option<f64>,
}

pub fn fourier_bohr(f: &FuncExpr, lambda: f64, scheme: &AveragingScheme) -> Result<FourierBohr> {
    Ok(fourier_bohr_many(f, &[lambda], scheme)?.remove(0))
}

/// Several coefficients from a single pass over the samples.
pub fn fourier_bohr_many(f: &FuncExpr, lambdas: &[f64], scheme: &AveragingScheme) -> Result<Vec<FourierBohr>> {
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("frequency must be finite"));
    }
    let d = f.dim();
    let nl = lambdas.len();
    let channels = 2 * d * nl;
    let grid = Grid::new(scheme);
    // real-valued functions skip the conjugate half of the kernel
    let complex = matches!(f.node(), Node::Trig(p) if p.is_complex());
    let (mut cvals, mut rvals) = (Vec::new(), Vec::new());
    let avs = grid.averages(channels, |span, out| {
        let mut j0 = 0;
        if complex {
            cvals.resize(span.len * d, Complex64::new(0.0, 0.0));
            f.eval_span_complex(span, &mut cvals)?;
        } else {
            rvals.resize(span.len * d, 0.0);
            f.eval_span(span, &mut rvals)?;
        }
        while j0 < nl {
            let g = (nl - j0).min(4);
            if complex {
                demodulate(&cvals, &lambdas[j0..j0 + g], j0, d, channels, span, out);
            } else {
                demodulate(&rvals, &lambdas[j0..j0 + g], j0, d, channels, span, out);
            }
            j0 += g;
        }
        Ok(())
    })?;
    let last = avs.last().expect("non-empty scheme");
    let b_max = scheme.b_max();
    let n = grid.n_max();
    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(j, &lambda)| {
            let value = (0..d)
                .map(|c| {
                    let ch = 2 * (j * d + c);
                    Complex64::new(last[ch], last[ch + 1])
                })
                .collect();
            let leakage_bound = match f.node() {
                Node::Trig(p) => Some(leakage(p.full_terms(), lambda, n, grid.h)),
                _ => None,
            };
            FourierBohr { lambda, value, nominal_bound: leakage_bound.map(|_| 2.0 / b_max), leakage_bound }
        })
        .collect())
}

/// Writes `vals * e^{-i lambda t}` for up to four frequencies starting at
/// index `j0`, advancing their rotations together.
trait Sample: Copy {
    fn times(self, z: Complex64) -> Complex64;
}

impl Sample for f64 {
    fn times(self, z: Complex64) -> Complex64 {
        z * self
    }
}

impl Sample for Complex64 {
    fn times(self, z: Complex64) -> Complex64 {
        self * z
    }
}

#[allow(clippy::needless_range_loop)]
fn demodulate<V: Sample>(vals: &[V], lambdas: &[f64], j0: usize, d: usize, channels: usize, span: Span, out: &mut [f64]) {
    let g = lambdas.len();
    let mut z = [Complex64::new(0.0, 0.0); 4];
    let mut w = [Complex64::new(0.0, 0.0); 4];
    for (i, &lambda) in lambdas.iter().enumerate() {
        let (si, co) = (-lambda * span.t0).sin_cos();
        z[i] = Complex64::new(co, si);
        let (wi, wr) = (-lambda * span.step).sin_cos();
        w[i] = Complex64::new(wr, wi);
    }
    for k in 0..span.len {
        let row = &mut out[k * channels..(k + 1) * channels];
        for i in 0..4 {
            if i < g {
                for c in 0..d {
                    let v = vals[k * d + c].times(z[i]);
                    let ch = 2 * ((j0 + i) * d + c);
                    row[ch] = v.re;
                    row[ch + 1] = v.im;
                }
            }
        }
        for (zi, wi) in z.iter_mut().zip(&w) {
            *zi *= wi;
        }
    }
}

fn leakage(terms: &[(f64, Vec<Complex64>)], lambda: f64, n: i64, h: f64) -> f64 {
    let tol = 1e-12 * lambda.abs().max(1.0);
    terms
        .iter()
        .filter(|(mu, _)| (mu - lambda).abs() > tol)
        .map(|(mu, c)| {
            let s = ((mu - lambda) * h / 2.0).sin().abs();
            let damp = if s == 0.0 { 1.0 } else { (1.0 / (2.0 * n as f64 * s)).min(1.0) };
            c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * damp
        })
        .sum()
}
