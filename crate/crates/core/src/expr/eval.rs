//! Evaluation on spans of equally spaced times.
//!
//! A span is `t0 + k*step` for `k < len`; values are written sample-major
//! (`out[k*dim + c]`). Polynomial terms are seeded once per span and advanced
//! by rotation, which makes long-horizon quadrature cheap. A single point is a
//! span of length one and uses direct evaluation throughout.

use num_complex::Complex64;

use super::{FuncExpr, Node, StepCompose, TrigPoly};
use crate::error::{Error, Result};
use crate::space::norm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub t0: f64,
    pub step: f64,
    pub len: usize,
}

impl Span {
    pub fn point(t: f64) -> Self {
        Span { t0: t, step: 0.0, len: 1 }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    fn shifted(&self, tau: f64) -> Self {
        Span { t0: self.t0 + tau, ..*self }
    }
}

impl FuncExpr {
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.eval_flagged(t)?.0)
    }

    /// Value at `t` and whether a step composition fell back to its default
    /// branch.
    pub fn eval_flagged(&self, t: f64) -> Result<(Vec<f64>, bool)> {
        if !t.is_finite() {
            return Err(Error::NonFiniteTime(t));
        }
        let mut out = vec![0.0; self.dim];
        let gap = self.eval_span(Span::point(t), &mut out)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(t));
        }
        Ok((out, gap))
    }

    pub fn eval_scalar(&self, t: f64) -> Result<f64> {
        if self.dim != 1 {
            return Err(Error::DimMismatch { expected: 1, found: self.dim });
        }
        Ok(self.eval(t)?[0])
    }

    /// Complex value; differs from `eval` only for complex polynomials.
    pub fn eval_complex(&self, t: f64) -> Result<Vec<Complex64>> {
        if !t.is_finite() {
            return Err(Error::NonFiniteTime(t));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        self.eval_span_complex(Span::point(t), &mut out)?;
        Ok(out)
    }

    /// `f(t + tau) - f(t)`, computed without cancellation where possible.
    pub fn shift_difference(&self, t: f64, tau: f64) -> Result<Vec<f64>> {
        if !t.is_finite() || !tau.is_finite() {
            return Err(Error::NonFiniteTime(if t.is_finite() { tau } else { t }));
        }
        let mut val = vec![0.0; self.dim];
        let mut delta = vec![0.0; self.dim];
        self.eval_span_delta(Span::point(t), tau, &mut val, &mut delta)?;
        Ok(delta)
    }

    /// Fills `out` (length `span.len * dim`) and returns the gap flag.
    pub fn eval_span(&self, span: Span, out: &mut [f64]) -> Result<bool> {
        debug_assert_eq!(out.len(), span.len * self.dim);
        let d = self.dim;
        match self.node() {
            Node::Trig(p) => {
                trig_span(p, span, out);
                Ok(false)
            }
            Node::Step(s) => step_span(s, d, span, out),
            Node::Shift { inner, tau } => inner.eval_span(span.shifted(*tau), out),
            Node::Truncate { inner, radius } => {
                let gap = inner.eval_span(span, out)?;
                for chunk in out.chunks_mut(d) {
                    truncate_in_place(chunk, *radius);
                }
                Ok(gap)
            }
            Node::Sgn(inner) => {
                let gap = inner.eval_span(span, out)?;
                for chunk in out.chunks_mut(d) {
                    sgn_in_place(chunk);
                }
                Ok(gap)
            }
            Node::Sum(a, b) => {
                let g1 = a.eval_span(span, out)?;
                let mut tmp = vec![0.0; out.len()];
                let g2 = b.eval_span(span, &mut tmp)?;
                for (o, v) in out.iter_mut().zip(&tmp) {
                    *o += v;
                }
                Ok(g1 || g2)
            }
            Node::ScalarProd { scalar, vector } => {
                let mut s = vec![0.0; span.len];
                let g1 = scalar.eval_span(span, &mut s)?;
                let g2 = vector.eval_span(span, out)?;
                for (k, chunk) in out.chunks_mut(d).enumerate() {
                    for v in chunk {
                        *v *= s[k];
                    }
                }
                Ok(g1 || g2)
            }
            Node::Perturbed { inner, series } => {
                let gap = inner.eval_span(span, out)?;
                series.add_span(span.t0, span.step, out);
                Ok(gap)
            }
            Node::Dist { inner, point, metric } => {
                let id = inner.dim;
                let mut tmp = vec![0.0; span.len * id];
                let gap = inner.eval_span(span, &mut tmp)?;
                for (k, chunk) in tmp.chunks(id).enumerate() {
                    out[k] = metric.dist(chunk, point);
                }
                Ok(gap)
            }
            Node::Stack(parts) => {
                let mut gap = false;
                let mut offset = 0;
                for p in parts {
                    let pd = p.dim;
                    let mut tmp = vec![0.0; span.len * pd];
                    gap |= p.eval_span(span, &mut tmp)?;
                    for k in 0..span.len {
                        out[k * d + offset..k * d + offset + pd].copy_from_slice(&tmp[k * pd..(k + 1) * pd]);
                    }
                    offset += pd;
                }
                Ok(gap)
            }
        }
    }

    /// Complex evaluation: complex polynomials keep their imaginary part,
    /// every other node is evaluated as a real function.
    pub fn eval_span_complex(&self, span: Span, out: &mut [Complex64]) -> Result<bool> {
        if let Node::Trig(p) = self.node() {
            trig_span_complex(p, span, out);
            return Ok(false);
        }
        let mut tmp = vec![0.0; out.len()];
        let gap = self.eval_span(span, &mut tmp)?;
        for (o, v) in out.iter_mut().zip(tmp) {
            *o = Complex64::new(v, 0.0);
        }
        Ok(gap)
    }

    /// Values into `val` and `f(t + tau) - f(t)` into `delta`.
    ///
    /// Polynomials and perturbation terms use `e^{i lambda tau} - 1 =
    /// 2i sin(lambda tau / 2) e^{i lambda tau / 2}`, so shifts far below the
    /// time resolution keep full relative accuracy. Step compositions fall
    /// back to differencing values at `t + tau` and `t`.
    pub fn eval_span_delta(&self, span: Span, tau: f64, val: &mut [f64], delta: &mut [f64]) -> Result<bool> {
        let d = self.dim;
        match self.node() {
            Node::Trig(p) => {
                trig_span_delta(p, span, tau, val, delta);
                Ok(false)
            }
            Node::Step(_) => {
                let g1 = self.eval_span(span, val)?;
                let g2 = self.eval_span(span.shifted(tau), delta)?;
                for (dl, v) in delta.iter_mut().zip(val.iter()) {
                    *dl -= v;
                }
                Ok(g1 || g2)
            }
            Node::Shift { inner, tau: s } => inner.eval_span_delta(span.shifted(*s), tau, val, delta),
            Node::Truncate { inner, radius } => {
                let gap = inner.eval_span_delta(span, tau, val, delta)?;
                map_delta(val, delta, d, |x| truncate_in_place(x, *radius));
                Ok(gap)
            }
            Node::Sgn(inner) => {
                let gap = inner.eval_span_delta(span, tau, val, delta)?;
                map_delta(val, delta, d, sgn_in_place);
                Ok(gap)
            }
            Node::Sum(a, b) => {
                let g1 = a.eval_span_delta(span, tau, val, delta)?;
                let mut v2 = vec![0.0; val.len()];
                let mut d2 = vec![0.0; val.len()];
                let g2 = b.eval_span_delta(span, tau, &mut v2, &mut d2)?;
                for i in 0..val.len() {
                    val[i] += v2[i];
                    delta[i] += d2[i];
                }
                Ok(g1 || g2)
            }
            Node::ScalarProd { scalar, vector } => {
                let mut s = vec![0.0; span.len];
                let mut ds = vec![0.0; span.len];
                let g1 = scalar.eval_span_delta(span, tau, &mut s, &mut ds)?;
                let g2 = vector.eval_span_delta(span, tau, val, delta)?;
                for k in 0..span.len {
                    for c in 0..d {
                        let i = k * d + c;
                        let (v, dv) = (val[i], delta[i]);
                        val[i] = s[k] * v;
                        delta[i] = ds[k] * (v + dv) + s[k] * dv;
                    }
                }
                Ok(g1 || g2)
            }
            Node::Perturbed { inner, series } => {
                let gap = inner.eval_span_delta(span, tau, val, delta)?;
                series.add_span_delta(span.t0, span.step, tau, val, delta);
                Ok(gap)
            }
            Node::Dist { inner, point, metric } => {
                let id = inner.dim;
                let mut a = vec![0.0; span.len * id];
                let mut da = vec![0.0; span.len * id];
                let gap = inner.eval_span_delta(span, tau, &mut a, &mut da)?;
                for k in 0..span.len {
                    let s = k * id..(k + 1) * id;
                    let (r, dr) = metric.dist_and_delta(&a[s.clone()], &da[s], point);
                    val[k] = r;
                    delta[k] = dr;
                }
                Ok(gap)
            }
            Node::Stack(parts) => {
                let mut gap = false;
                let mut offset = 0;
                for p in parts {
                    let pd = p.dim;
                    let mut v = vec![0.0; span.len * pd];
                    let mut dl = vec![0.0; span.len * pd];
                    gap |= p.eval_span_delta(span, tau, &mut v, &mut dl)?;
                    for k in 0..span.len {
                        let dst = k * d + offset..k * d + offset + pd;
                        val[dst.clone()].copy_from_slice(&v[k * pd..(k + 1) * pd]);
                        delta[dst].copy_from_slice(&dl[k * pd..(k + 1) * pd]);
                    }
                    offset += pd;
                }
                Ok(gap)
            }
        }
    }
}

fn map_delta(val: &mut [f64], delta: &mut [f64], d: usize, f: impl Fn(&mut [f64])) {
    let mut moved = vec![0.0; d];
    for (v, dl) in val.chunks_mut(d).zip(delta.chunks_mut(d)) {
        for c in 0..d {
            moved[c] = v[c] + dl[c];
        }
        f(v);
        f(&mut moved);
        for c in 0..d {
            dl[c] = moved[c] - v[c];
        }
    }
}

pub(crate) fn truncate_in_place(x: &mut [f64], a: f64) {
    let n = norm(x);
    if n > a {
        let s = a / n;
        for v in x {
            *v *= s;
        }
    }
}

pub(crate) fn sgn_in_place(x: &mut [f64]) {
    let n = norm(x);
    if n == 0.0 {
        x.fill(0.0);
    } else {
        for v in x {
            *v /= n;
        }
    }
}

type Kernel = [(f64, Vec<Complex64>)];

/// Interleaved phasor recurrences: `G` terms advance together so their
/// rotation chains overlap. Each output still receives its terms in kernel
/// order, so results match a term-by-term loop bit for bit.
struct Phasors<const G: usize> {
    zr: [f64; G],
    zi: [f64; G],
    wr: [f64; G],
    wi: [f64; G],
}

impl<const G: usize> Phasors<G> {
    fn new(lambdas: impl Fn(usize) -> f64, span: Span) -> Self {
        let mut p = Phasors { zr: [0.0; G], zi: [0.0; G], wr: [0.0; G], wi: [0.0; G] };
        for g in 0..G {
            let l = lambdas(g);
            (p.zi[g], p.zr[g]) = (l * span.t0).sin_cos();
            (p.wi[g], p.wr[g]) = (l * span.step).sin_cos();
        }
        p
    }

    #[inline(always)]
    fn advance(&mut self) {
        for g in 0..G {
            let nr = self.zr[g] * self.wr[g] - self.zi[g] * self.wi[g];
            self.zi[g] = self.zr[g] * self.wi[g] + self.zi[g] * self.wr[g];
            self.zr[g] = nr;
        }
    }
}

/// Runs `f::<4>` over full groups of four terms, then `f::<1>` on the rest.
macro_rules! grouped {
    ($kernel:expr, $f:ident($($arg:expr),*)) => {{
        let mut it = $kernel.chunks_exact(4);
        for g in &mut it {
            $f::<4>(g, $($arg),*);
        }
        for g in it.remainder().chunks(1) {
            $f::<1>(g, $($arg),*);
        }
    }};
}

fn trig_span(p: &TrigPoly, span: Span, out: &mut [f64]) {
    let d = p.dim();
    out.fill(0.0);
    if span.len == 1 {
        for (lambda, coef) in &p.real_kernel {
            let (zi, zr) = (lambda * span.t0).sin_cos();
            for c in 0..d {
                out[c] += coef[c].re * zr - coef[c].im * zi;
            }
        }
        return;
    }
    grouped!(p.real_kernel, real_group(span, d, out));
}

#[allow(clippy::needless_range_loop)]
fn real_group<const G: usize>(group: &Kernel, span: Span, d: usize, out: &mut [f64]) {
    let mut z = Phasors::<G>::new(|g| group[g].0, span);
    if d == 1 {
        let cr: [f64; G] = std::array::from_fn(|g| group[g].1[0].re);
        let ci: [f64; G] = std::array::from_fn(|g| group[g].1[0].im);
        for o in out.iter_mut() {
            for g in 0..G {
                *o += cr[g] * z.zr[g] - ci[g] * z.zi[g];
            }
            z.advance();
        }
    } else {
        for chunk in out.chunks_mut(d) {
            for g in 0..G {
                let coef = &group[g].1;
                for c in 0..d {
                    chunk[c] += coef[c].re * z.zr[g] - coef[c].im * z.zi[g];
                }
            }
            z.advance();
        }
    }
}

fn trig_span_complex(p: &TrigPoly, span: Span, out: &mut [Complex64]) {
    let d = p.dim();
    out.fill(Complex64::new(0.0, 0.0));
    grouped!(p.full_kernel, complex_group(span, d, out));
}

#[allow(clippy::needless_range_loop)]
fn complex_group<const G: usize>(group: &Kernel, span: Span, d: usize, out: &mut [Complex64]) {
    let mut z = Phasors::<G>::new(|g| group[g].0, span);
    for chunk in out.chunks_mut(d) {
        for g in 0..G {
            let zg = Complex64::new(z.zr[g], z.zi[g]);
            for c in 0..d {
                chunk[c] += group[g].1[c] * zg;
            }
        }
        z.advance();
    }
}

fn trig_span_delta(p: &TrigPoly, span: Span, tau: f64, val: &mut [f64], delta: &mut [f64]) {
    let d = p.dim();
    val.fill(0.0);
    delta.fill(0.0);
    grouped!(p.real_kernel, delta_group(span, tau, d, val, delta));
}

#[allow(clippy::needless_range_loop)]
fn delta_group<const G: usize>(group: &Kernel, span: Span, tau: f64, d: usize, val: &mut [f64], delta: &mut [f64]) {
    let dcoef: [Vec<Complex64>; G] = std::array::from_fn(|g| {
        let (lambda, coef) = &group[g];
        let (sx, cx) = (0.5 * lambda * tau).sin_cos();
        let phi = Complex64::new(-2.0 * sx * sx, 2.0 * sx * cx);
        coef.iter().map(|c| c * phi).collect()
    });
    let mut z = Phasors::<G>::new(|g| group[g].0, span);
    for k in 0..span.len {
        for g in 0..G {
            let coef = &group[g].1;
            for c in 0..d {
                val[k * d + c] += coef[c].re * z.zr[g] - coef[c].im * z.zi[g];
                delta[k * d + c] += dcoef[g][c].re * z.zr[g] - dcoef[g][c].im * z.zi[g];
            }
        }
        z.advance();
    }
}

fn step_span(s: &StepCompose, d: usize, span: Span, out: &mut [f64]) -> Result<bool> {
    let n = span.len;
    let mut gap = false;
    if let Some(loc) = &s.locator {
        for k in 0..n {
            let t = span.time(k);
            let idx = match loc.branch(t)? {
                Some(i) if i < s.branches.len() => i,
                _ => {
                    gap = true;
                    0
                }
            };
            gap |= s.branches[idx].eval_span(Span::point(t), &mut out[k * d..(k + 1) * d])?;
        }
        return Ok(gap);
    }
    let mut chosen = vec![usize::MAX; n];
    let mut remaining = n;
    let mut mask = vec![false; n];
    for (i, set) in s.sets.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        set.contains_span(span, &mut mask)?;
        for k in 0..n {
            if chosen[k] == usize::MAX && mask[k] {
                chosen[k] = i;
                remaining -= 1;
            }
        }
    }
    for c in chosen.iter_mut() {
        if *c == usize::MAX {
            *c = 0;
            gap = true;
        }
    }
    let mut used: Vec<usize> = chosen.clone();
    used.sort_unstable();
    used.dedup();
    let mut tmp = vec![0.0; n * d];
    for b in used {
        gap |= s.branches[b].eval_span(span, &mut tmp)?;
        for k in 0..n {
            if chosen[k] == b {
                out[k * d..(k + 1) * d].copy_from_slice(&tmp[k * d..(k + 1) * d]);
            }
        }
    }
    Ok(gap)
}
