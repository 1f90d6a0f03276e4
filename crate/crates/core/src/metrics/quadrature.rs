//! Deterministic midpoint quadrature on a dyadic grid shared by all horizons.
//!
//! Sample `i` sits at `(i + 1/2) h`. Horizon `k` covers indices
//! `[-n_k, n_k)`, so each horizon adds a left and a right shell to the
//! previous one. Shell sums are pairwise within blocks and combined across
//! blocks by a binary cascade, all in a fixed order.

use super::AveragingScheme;
use crate::error::Result;
use crate::expr::Span;

pub(crate) const BLOCK: usize = 256;

#[derive(Debug, Clone)]
pub(crate) struct Grid {
    pub h: f64,
    pub halves: Vec<i64>,
}

impl Grid {
    pub fn new(scheme: &AveragingScheme) -> Self {
        let h = scheme.grid_step();
        let halves = scheme.b_list().iter().map(|b| (b / h).ceil() as i64).collect();
        Grid { h, halves }
    }

    pub fn n_max(&self) -> i64 {
        *self.halves.last().expect("non-empty")
    }

    pub fn horizons(&self) -> Vec<f64> {
        self.halves.iter().map(|&n| n as f64 * self.h).collect()
    }

    pub fn time(&self, i: i64) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    pub fn span(&self, i: i64, len: usize) -> Span {
        Span { t0: self.time(i), step: self.h, len }
    }

    /// Per-horizon averages of a `channels`-valued integrand. The closure
    /// fills `out[k*channels + c]` for the span's samples.
    pub fn averages<F>(&self, channels: usize, mut f: F) -> Result<Vec<Vec<f64>>>
    where
        F: FnMut(Span, &mut [f64]) -> Result<()>,
    {
        let mut totals = vec![0.0; channels];
        let mut out = Vec::with_capacity(self.halves.len());
        let mut buf = vec![0.0; BLOCK * channels];
        let mut prev = 0i64;
        for &n in &self.halves {
            let left = self.range_sums(-n, -prev, channels, &mut f, &mut buf)?;
            let right = self.range_sums(prev, n, channels, &mut f, &mut buf)?;
            for c in 0..channels {
                totals[c] += left[c] + right[c];
            }
            out.push(totals.iter().map(|s| s / (2 * n) as f64).collect());
            prev = n;
        }
        Ok(out)
    }

    fn range_sums<F>(&self, a: i64, b: i64, channels: usize, f: &mut F, buf: &mut [f64]) -> Result<Vec<f64>>
    where
        F: FnMut(Span, &mut [f64]) -> Result<()>,
    {
        let mut cascades = vec![Cascade::default(); channels];
        let depth = BLOCK.trailing_zeros() as usize;
        let mut sums = vec![0.0; channels * (depth + 1)];
        let mut i = a;
        while i < b {
            let len = ((b - i) as usize).min(BLOCK);
            let chunk = &mut buf[..len * channels];
            f(self.span(i, len), chunk)?;
            let (block, scratch) = sums.split_at_mut(channels);
            pairwise_rows(chunk, channels, block, scratch);
            for (cascade, &v) in cascades.iter_mut().zip(block.iter()) {
                cascade.push(v);
            }
            i += len as i64;
        }
        Ok(cascades.into_iter().map(|c| c.finish()).collect())
    }

    /// Visits `[a, b)` in increasing order, one span at a time, passing the
    /// index of the span's first sample.
    pub fn for_each<F>(&self, a: i64, b: i64, mut f: F) -> Result<()>
    where
        F: FnMut(i64, Span) -> Result<()>,
    {
        let mut i = a;
        while i < b {
            let len = ((b - i) as usize).min(BLOCK);
            f(i, self.span(i, len))?;
            i += len as i64;
        }
        Ok(())
    }
}

#[cfg(test)]
fn pairwise(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise(&xs[..mid]) + pairwise(&xs[mid..])
}

/// Column-wise pairwise sums of a row-major `rows` table of width `width`:
/// halves are split at `n / 2` down to runs of at most eight rows.
fn pairwise_rows(rows: &[f64], width: usize, out: &mut [f64], scratch: &mut [f64]) {
    let n = rows.len() / width;
    if n <= 8 {
        out.fill(0.0);
        for row in rows.chunks_exact(width) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        return;
    }
    let mid = n / 2;
    let (right, rest) = scratch.split_at_mut(width);
    pairwise_rows(&rows[..mid * width], width, out, rest);
    pairwise_rows(&rows[mid * width..], width, right, rest);
    for (o, r) in out.iter_mut().zip(right.iter()) {
        *o += r;
    }
}

/// Binary-counter pairwise summation over a stream of block sums.
#[derive(Debug, Clone, Default)]
struct Cascade {
    stack: Vec<(u32, f64)>,
}

impl Cascade {
    fn push(&mut self, v: f64) {
        let mut cur = (0u32, v);
        while let Some(&(level, s)) = self.stack.last() {
            if level != cur.0 {
                break;
            }
            self.stack.pop();
            cur = (level + 1, s + cur.1);
        }
        self.stack.push(cur);
    }

    fn finish(self) -> f64 {
        self.stack.iter().rev().fold(0.0, |acc, &(_, s)| s + acc)
    }
}

/// Error-free `a + b = s + e`.
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Running sum carried in double-double precision.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo2) = two_sum(s, lo);
        self.hi = hi;
        self.lo = lo2;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sums_match_column_pairwise() {
        let width = 3;
        for len in [1, 7, 9, 100, 255, 256] {
            let rows: Vec<f64> = (0..len * width).map(|k| ((k * 7919) % 1013) as f64 * 1e-3 + 1.0 / (k + 1) as f64).collect();
            let mut out = vec![0.0; width];
            let mut scratch = vec![0.0; width * 8];
            pairwise_rows(&rows, width, &mut out, &mut scratch);
            for c in 0..width {
                let lane: Vec<f64> = rows.iter().skip(c).step_by(width).copied().collect();
                assert_eq!(out[c].to_bits(), pairwise(&lane).to_bits());
            }
        }
    }

    #[test]
    fn constant_integrand_averages_exactly() {
        let s = AveragingScheme::new(vec![10.0, 20.0, 40.0], 0.01, 2).unwrap();
        let g = Grid::new(&s);
        let avs = g.averages(1, |_, out| {
            out.fill(3.0);
            Ok(())
        })
        .unwrap();
        for a in avs {
            assert_eq!(a[0], 3.0);
        }
    }

    #[test]
    fn horizons_are_grid_aligned() {
        let s = AveragingScheme::new(vec![100.0, 250.6], 0.3, 1).unwrap();
        let g = Grid::new(&s);
        assert_eq!(g.h, 0.25);
        assert_eq!(g.horizons(), vec![100.0, 250.75]);
    }

    #[test]
    fn linear_integrand_is_odd() {
        let s = AveragingScheme::new(vec![5.0, 10.0], 0.01, 1).unwrap();
        let g = Grid::new(&s);
        let avs = g
            .averages(1, |span, out| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = span.time(k);
                }
                Ok(())
            })
            .unwrap();
        assert!(avs[1][0].abs() < 1e-12);
    }

    #[test]
    fn double_double_recovers_cancellation() {
        let mut d = DoubleDouble::default();
        d.add(1e16);
        d.add(1.0);
        d.add(-1e16);
        assert_eq!(d.value(), 1.0);
    }

    #[test]
    fn cascade_matches_plain_sum_on_integers() {
        let mut c = Cascade::default();
        for k in 0..1000 {
            c.push(k as f64);
        }
        assert_eq!(c.finish(), 499500.0);
    }
}
