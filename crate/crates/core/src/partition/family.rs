use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::Arc;

use super::cover::{cover_points, Cover, CenterIndex, DEFAULT_MAX_CENTERS};
use crate::error::{Error, Result};
use crate::expr::{BranchLocator, FuncExpr};
use crate::freq::{FrequencyBasis, FrequencyModule};
use crate::metrics::quadrature::Grid;
use crate::metrics::{AverageEstimate, AveragingScheme};
use crate::perturb::{
    build_perturbation, infer_lattice, lemma41_params, stage_amplitude, tau0_estimate, PerturbOptions,
    PerturbationSeries, ProbeGrid,
};
use crate::sets::{Relation, SetExpr};
use crate::space::PointMetric;

/// Capped distance to the mean below which a function counts as constant.
pub const CONSTANT_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct PartitionOptions {
    /// Depth of each perturbation series.
    pub depth: usize,
    /// Target for the upper density of the uncovered times.
    pub resid_target: f64,
    pub max_centers: usize,
    /// Period of the perturbations; by default `2*pi / |beta|` for the first
    /// generator `beta` of the frequency module.
    pub period: Option<f64>,
    pub perturb: PerturbOptions,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            depth: 1,
            resid_target: 0.05,
            max_centers: DEFAULT_MAX_CENTERS,
            period: None,
            perturb: PerturbOptions::default(),
        }
    }
}

/// Disjoint sets `T_j` with centers `x_j` such that `rho(f(t), x_j) < eps`
/// on `T_j`.
#[derive(Debug, Clone)]
pub struct PartitionFamily {
    pub eps: f64,
    pub metric: PointMetric,
    pub f: FuncExpr,
    pub points: Vec<Vec<f64>>,
    /// `T'_j = {t : rho(f(t), x_j) - 2 eps / 3 + g_j(t) <= 0}`.
    pub primes: Vec<Arc<SetExpr>>,
    /// `T_j = T'_j minus the union of the earlier `T'_k`.
    pub sets: Vec<Arc<SetExpr>>,
    pub perturbations: Vec<Arc<PerturbationSeries>>,
    /// Period shared by the perturbations; `None` for constant input.
    pub b: Option<f64>,
    pub cover: Option<Cover>,
    /// Upper density of the complement of the union of all sets.
    pub residual: AverageEstimate,
    /// `residual_curve[n]`: residual estimate using the first `n + 1` sets.
    pub residual_curve: Vec<f64>,
    /// Superset of the frequency modules of the sets.
    pub module_report: FrequencyModule,
    index: CenterIndex,
}

impl PartitionFamily {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn is_trivial(&self) -> bool {
        self.b.is_none()
    }

    /// Index of the set containing `t`, if any.
    pub fn locate(&self, t: f64) -> Result<Option<usize>> {
        if self.is_trivial() {
            return Ok(Some(0));
        }
        let v = self.f.eval(t)?;
        Ok(self.locate_with_value(t, &v))
    }

    /// As `locate`, given `f(t)`. Uses the same operations as membership in
    /// `T'_j`, so the result agrees with `sets[j].contains(t)` whenever `v`
    /// is the pointwise value.
    pub fn locate_with_value(&self, t: f64, v: &[f64]) -> Option<usize> {
        if self.is_trivial() {
            return Some(0);
        }
        let offset = -2.0 * self.eps / 3.0;
        let mut best: Option<usize> = None;
        let mut check = |j: usize| {
            if best.is_some_and(|b| j > b) {
                return;
            }
            let x = self.metric.dist(v, &self.points[j]) + offset;
            if x + self.perturbations[j].value(t) <= 0.0 {
                best = Some(j);
            }
        };
        if self.metric.prunes_at(self.eps) {
            for j in self.index.window(v[0], self.eps) {
                check(j);
            }
        } else {
            for j in 0..self.points.len() {
                check(j);
            }
        }
        best
    }
}

impl BranchLocator for PartitionFamily {
    fn branch(&self, t: f64) -> Result<Option<usize>> {
        self.locate(t)
    }
}

/// Mean of `f` on the largest horizon and the windowed capped distance to it.
fn constant_fit(f: &FuncExpr, metric: &PointMetric, scheme: &AveragingScheme) -> Result<(Vec<f64>, f64)> {
    let d = f.dim();
    let grid = Grid::new(scheme);
    let avs = grid.averages(d, |span, out| {
        f.eval_span(span, out)?;
        Ok(())
    })?;
    let mean = avs.last().expect("non-empty scheme").clone();
    let mut buf = Vec::new();
    let dist = grid.averages(1, |span, out| {
        buf.resize(span.len * d, 0.0);
        f.eval_span(span, &mut buf)?;
        for (k, o) in out.iter_mut().enumerate() {
            *o = metric.dist(&buf[k * d..(k + 1) * d], &mean).min(1.0);
        }
        Ok(())
    })?;
    let dist: Vec<f64> = dist.into_iter().map(|v| v[0]).collect();
    let est = AverageEstimate::from_averages(&grid.horizons(), &dist, scheme.window());
    Ok((mean, est.value))
}

/// Period and the integer vector naming `2*pi/b`.
fn choose_period(
    module: &FrequencyModule,
    basis: &Arc<FrequencyBasis>,
    period: Option<f64>,
) -> Result<(f64, Option<Vec<i64>>)> {
    if let Some(b) = period {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid("period must be positive and finite"));
        }
        return Ok((b, infer_lattice(basis, b)));
    }
    let Some(g) = module.generators().first() else {
        return Err(Error::invalid("non-constant function with an empty frequency module"));
    };
    let beta = basis.frequency(g)?;
    let g = if beta < 0.0 { g.iter().map(|c| -c).collect() } else { g.clone() };
    Ok((TAU / beta.abs(), Some(g)))
}

/// Union of `sets[..j]` built from shared dyadic blocks.
fn prefix_union(
    sets: &[Arc<SetExpr>],
    j: usize,
    memo: &mut HashMap<(u32, usize), Arc<SetExpr>>,
) -> Arc<SetExpr> {
    fn block(sets: &[Arc<SetExpr>], level: u32, k: usize, memo: &mut HashMap<(u32, usize), Arc<SetExpr>>) -> Arc<SetExpr> {
        if level == 0 {
            return sets[k].clone();
        }
        if let Some(s) = memo.get(&(level, k)) {
            return s.clone();
        }
        let a = block(sets, level - 1, 2 * k, memo);
        let b = block(sets, level - 1, 2 * k + 1, memo);
        let u = SetExpr::union(a, b);
        memo.insert((level, k), u.clone());
        u
    }
    let mut parts = Vec::new();
    let mut start = 0usize;
    for level in (0..usize::BITS).rev() {
        let size = 1usize << level;
        if j & size != 0 {
            parts.push(block(sets, level, start >> level, memo));
            start += size;
        }
    }
    let mut acc = parts.pop().expect("j > 0");
    while let Some(p) = parts.pop() {
        acc = SetExpr::union(p, acc);
    }
    acc
}

/// Builds a partition with accuracy `eps` for `f` under `metric`.
pub fn build_partition(
    f: &FuncExpr,
    eps: f64,
    metric: &PointMetric,
    scheme: &AveragingScheme,
    options: &PartitionOptions,
) -> Result<PartitionFamily> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(options.resid_target > 0.0) {
        return Err(Error::invalid("residual target must be positive"));
    }
    metric.validate(f.dim())?;
    let basis = f.basis()?;
    let module = f.freq_module()?;
    let (mean, spread) = constant_fit(f, metric, scheme)?;
    if spread < CONSTANT_TOL {
        let full = Arc::new(SetExpr::FullLine);
        let grid = Grid::new(scheme);
        let zeros = vec![0.0; grid.halves.len()];
        let residual = AverageEstimate::from_averages(&grid.horizons(), &zeros, scheme.window());
        return Ok(PartitionFamily {
            eps,
            metric: metric.clone(),
            f: f.clone(),
            points: vec![mean],
            primes: vec![full.clone()],
            sets: vec![full],
            perturbations: Vec::new(),
            b: None,
            cover: None,
            residual,
            residual_curve: vec![0.0],
            module_report: FrequencyModule::zero(basis),
            index: CenterIndex::new(),
        });
    }
    let (b, lattice) = choose_period(&module, &basis, options.period)?;
    let cover = cover_points(f, eps / 3.0, options.resid_target, metric, scheme, options.max_centers)?;
    let mut popts = options.perturb.clone();
    if let Some(g) = &lattice {
        popts.lattice = Some((basis.clone(), g.clone()));
    }
    if popts.stage0_tau0.is_none() {
        // Each `dist(f, x_j)` is 1-Lipschitz for the Euclidean norm, so one
        // scan of `f` serves stage 0 of every center.
        let amp = stage_amplitude(eps / 3.0, 0, &[]);
        let bound = lemma41_params(0.5, amp)?.tau_bound();
        let probe_scheme = popts.probe_scheme.as_ref().unwrap_or(scheme);
        let probes = ProbeGrid::for_family(std::slice::from_ref(f), bound, popts.fallback_start)?;
        popts.stage0_tau0 = Some(tau0_estimate(std::slice::from_ref(f), bound, probe_scheme, &probes)?);
    }
    let offset = FuncExpr::constant(&basis, &[-2.0 * eps / 3.0])?;
    let mut primes = Vec::with_capacity(cover.centers.len());
    let mut perturbations = Vec::with_capacity(cover.centers.len());
    let mut index = CenterIndex::new();
    for (j, x) in cover.centers.iter().enumerate() {
        let wrap = |e: Error| Error::Center { center: j, source: Box::new(e) };
        let h = f.dist_to(x, metric.clone()).and_then(|d| d.add(&offset)).map_err(wrap)?;
        let built = build_perturbation(std::slice::from_ref(&h), eps / 3.0, b, options.depth, scheme, &popts)
            .map_err(wrap)?;
        let g = Arc::new(built.series);
        primes.push(Arc::new(SetExpr::level(h.perturbed(g.clone())?, 0.0, Relation::Le)?));
        perturbations.push(g);
        index.insert(x[0], j);
    }
    let mut memo = HashMap::new();
    let sets: Vec<Arc<SetExpr>> = (0..primes.len())
        .map(|j| if j == 0 { primes[0].clone() } else { SetExpr::diff(primes[j].clone(), prefix_union(&primes, j, &mut memo)) })
        .collect();
    let module_report = match &lattice {
        Some(g) => module.with_generator(g.clone())?,
        None => module,
    };
    let mut family = PartitionFamily {
        eps,
        metric: metric.clone(),
        f: f.clone(),
        points: cover.centers.clone(),
        primes,
        sets,
        perturbations,
        b: Some(b),
        cover: Some(cover),
        residual: AverageEstimate { value: 0.0, per_horizon: Vec::new(), spread: 0.0 },
        residual_curve: Vec::new(),
        module_report,
        index,
    };
    let (residual, curve) = residual_curve(&family, scheme)?;
    family.residual = residual;
    family.residual_curve = curve;
    Ok(family)
}

/// Residual densities of every prefix of the family, from per-shell counts of
/// the located set index.
fn residual_curve(family: &PartitionFamily, scheme: &AveragingScheme) -> Result<(AverageEstimate, Vec<f64>)> {
    let grid = Grid::new(scheme);
    let n = grid.n_max();
    let sets = family.len();
    let shells = grid.halves.len();
    // hist[s][j]: samples of shell s located in T_j; slot `sets` is "none".
    let mut hist = vec![vec![0u64; sets + 1]; shells];
    let d = family.f.dim();
    let mut buf = Vec::new();
    grid.for_each(-n, n, |first, span| {
        buf.resize(span.len * d, 0.0);
        family.f.eval_span(span, &mut buf)?;
        for k in 0..span.len {
            let i = first + k as i64;
            let j = family.locate_with_value(span.time(k), &buf[k * d..(k + 1) * d]).unwrap_or(sets);
            let a = if i >= 0 { i } else { -i - 1 };
            let sh = grid.halves.partition_point(|&h| h <= a);
            hist[sh][j] += 1;
        }
        Ok(())
    })?;
    let horizons = grid.horizons();
    let mut above: Vec<u64> = hist.iter().map(|h| h[sets]).collect();
    let mut curve = vec![0.0; sets];
    let mut last = None;
    for m in (1..=sets).rev() {
        let mut acc = 0u64;
        let avs: Vec<f64> = above
            .iter()
            .zip(&grid.halves)
            .map(|(&x, &nk)| {
                acc += x;
                acc as f64 / (2 * nk) as f64
            })
            .collect();
        let est = AverageEstimate::from_averages(&horizons, &avs, scheme.window());
        curve[m - 1] = est.value;
        if m == sets {
            last = Some(est);
        }
        for (s, h) in hist.iter().enumerate() {
            above[s] += h[m - 1];
        }
    }
    Ok((last.expect("at least one set"), curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scheme() -> AveragingScheme {
        AveragingScheme::new(vec![100.0, 200.0], 1.0 / 64.0, 1).unwrap()
    }

    #[test]
    fn constant_gives_full_line() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let c = FuncExpr::constant(&b, &[0.5, 2.0]).unwrap();
        let p = build_partition(&c, 0.5, &PointMetric::Euclidean, &scheme(), &PartitionOptions::default()).unwrap();
        assert!(p.is_trivial());
        assert_eq!(p.points, vec![vec![0.5, 2.0]]);
        assert_eq!(*p.sets[0], SetExpr::FullLine);
        assert_eq!(p.residual.value, 0.0);
        assert!(p.module_report.is_zero());
    }

    #[test]
    fn prefix_unions_match_the_prefix() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        for target in 0..11 {
            // only set `target` contains the origin
            let sets: Vec<Arc<SetExpr>> = (0..11)
                .map(|k| {
                    let c = FuncExpr::constant(&b, &[(k as f64 - target as f64).abs()]).unwrap();
                    Arc::new(SetExpr::level(c, 0.5, Relation::Le).unwrap())
                })
                .collect();
            let mut memo = HashMap::new();
            for j in 1..=11 {
                assert_eq!(prefix_union(&sets, j, &mut memo).contains(0.0).unwrap(), target < j);
            }
        }
    }

    #[test]
    fn sine_partition_properties() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let f = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let opts = PartitionOptions { depth: 0, resid_target: 0.01, ..Default::default() };
        let p = build_partition(&f, 0.5, &PointMetric::Euclidean, &scheme(), &opts).unwrap();
        assert_eq!(p.b, Some(TAU));
        assert!(p.residual.value < 0.01);
        for k in 0..2000 {
            let t = -150.0 + 0.1501 * k as f64;
            let loc = p.locate(t).unwrap();
            let v = f.eval_scalar(t).unwrap();
            let mut members = 0;
            for (j, s) in p.sets.iter().enumerate() {
                if s.contains(t).unwrap() {
                    members += 1;
                    assert_eq!(loc, Some(j));
                    assert!((v - p.points[j][0]).abs() < 0.5);
                }
            }
            assert!(members <= 1);
            if loc.is_none() {
                assert!(p.points.iter().all(|x| (v - x[0]).abs() > 0.5 / 3.0));
            }
        }
    }
}
