use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::gamma::{gamma_schedule, GammaSchedule};
use crate::error::{Error, Result};
use crate::expr::{BranchLocator, FuncExpr};
use crate::freq::FrequencyModule;
use crate::metrics::dist_hausdorff;
use crate::metrics::quadrature::Grid;
use crate::metrics::{AverageEstimate, AveragingScheme};
use crate::multimap::MultiMap;
use crate::partition::{build_partition, PartitionFamily, PartitionOptions};
use crate::sets::SetExpr;
use crate::space::PointMetric;

type Choice = (Vec<f64>, Vec<Vec<f64>>);

/// A chosen point for one cell of the nested partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub depth: usize,
    pub indices: Vec<usize>,
    /// Smallest grid time in the cell.
    pub rep_time: f64,
    pub trajectory: usize,
    pub point: Vec<f64>,
    /// Distance to the parent cell's point.
    pub step: Option<f64>,
    /// Capped Hausdorff distance between the parent's and this cell's sets.
    pub hausdorff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthLog {
    pub depth: usize,
    pub partition_size: usize,
    pub cells: usize,
    pub max_step: f64,
    /// `2 (gamma_{n-1} + gamma_n) eps` for depths above one.
    pub step_bound: Option<f64>,
    /// Steps at or above `step_bound`.
    pub bound_violations: usize,
    pub partition_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCertificate {
    pub tail_bound: f64,
    /// `gamma_1 eps + tail_bound`.
    pub membership_threshold: f64,
    /// Upper density of `{t : dist(f(t), F(t)) >= membership_threshold}`.
    pub membership: AverageEstimate,
    /// Upper density of `{t : rho(f(t), g(t)) >= rho(g(t), F(t)) + eps}`.
    pub nearness: AverageEstimate,
}

#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub selection: FuncExpr,
    pub depth: usize,
    pub eps: f64,
    pub gammas: GammaSchedule,
    /// Records of every depth, ordered by depth and then by cell indices.
    pub cells: Vec<CellRecord>,
    pub chain_log: Vec<DepthLog>,
    pub certificate: SelectionCertificate,
    pub partitions: Vec<Arc<PartitionFamily>>,
    pub module_report: FrequencyModule,
}

impl SelectionResult {
    pub fn final_cells(&self) -> impl Iterator<Item = &CellRecord> {
        self.cells.iter().filter(move |c| c.depth == self.depth)
    }
}

/// Finds the depth-`n` cell of `t` by locating the joint value in each level.
#[derive(Debug)]
struct CellLocator {
    product: FuncExpr,
    levels: Vec<Arc<PartitionFamily>>,
    cells: HashMap<Vec<usize>, usize>,
}

impl CellLocator {
    fn key(&self, t: f64, v: &[f64]) -> Option<Vec<usize>> {
        self.levels.iter().map(|p| p.locate_with_value(t, v)).collect()
    }
}

impl BranchLocator for CellLocator {
    fn branch(&self, t: f64) -> Result<Option<usize>> {
        let v = self.product.eval(t)?;
        Ok(self.key(t, &v).and_then(|k| self.cells.get(&k).copied()))
    }
}

fn nearest(values: &[Vec<f64>], target: &[f64], metric: &PointMetric) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.iter().enumerate() {
        let d = metric.dist(v, target);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

/// Selection `f` of `F` with `rho(f, g) < rho(g, F) + eps` up to a small
/// density, from `n_max` nested partitions of `t -> (F(t), g(t))`.
pub fn build_selection(
    map: &MultiMap,
    g: &FuncExpr,
    eps: f64,
    n_max: usize,
    scheme: &AveragingScheme,
    options: &PartitionOptions,
) -> Result<SelectionResult> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if g.dim() != map.dim() {
        return Err(Error::DimMismatch { expected: map.dim(), found: g.dim() });
    }
    let gammas = gamma_schedule(n_max)?;
    let product = map.stacked(std::slice::from_ref(g))?;
    let block = map.block_metric(1);
    let rho = map.space().point_metric();

    let mut levels = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let acc = gammas.get(n) * eps / 2.0;
        let p = build_partition(&product, acc, &block, scheme, options)
            .map_err(|e| Error::Depth { depth: n, source: Box::new(e) })?;
        levels.push(Arc::new(p));
    }
    let mut locator = CellLocator { product: product.clone(), levels: levels.clone(), cells: HashMap::new() };

    // representatives: smallest grid time of each cell at each depth
    let grid = Grid::new(scheme);
    let n = grid.n_max();
    let dp = product.dim();
    let mut reps: Vec<BTreeMap<Vec<usize>, f64>> = vec![BTreeMap::new(); n_max];
    let mut buf = Vec::new();
    grid.for_each(-n, n, |_, span| {
        buf.resize(span.len * dp, 0.0);
        product.eval_span(span, &mut buf)?;
        for k in 0..span.len {
            let t = span.time(k);
            let Some(key) = locator.key(t, &buf[k * dp..(k + 1) * dp]) else { continue };
            if (1..=n_max).all(|m| reps[m - 1].contains_key(&key[..m])) {
                continue;
            }
            // confirm with the pointwise value used by the locator
            let v = product.eval(t)?;
            if locator.key(t, &v).as_ref() != Some(&key) {
                continue;
            }
            for m in 1..=n_max {
                reps[m - 1].entry(key[..m].to_vec()).or_insert(t);
            }
        }
        Ok(())
    })?;

    let mut cells: Vec<CellRecord> = Vec::new();
    // cell indices -> (chosen point, sampled set)
    let mut chosen: HashMap<Vec<usize>, Choice> = HashMap::new();
    let mut chain_log = Vec::with_capacity(n_max);
    for m in 1..=n_max {
        let step_bound = (m > 1).then(|| gammas.step_bound(m, eps));
        let mut max_step = 0.0f64;
        let mut violations = 0;
        for (key, &t) in &reps[m - 1] {
            let values = map.values(t)?;
            let (traj, step, haus) = if m == 1 {
                let gv = g.eval(t)?;
                (nearest(&values, &gv, &rho).0, None, None)
            } else {
                let (parent_point, parent_values) = &chosen[&key[..m - 1]];
                let (k, step) = nearest(&values, parent_point, &rho);
                let haus = dist_hausdorff(parent_values, &values, &rho)?.min(1.0);
                if step > 2.0 * haus {
                    return Err(Error::Refinement { depth: m, cell: key.clone(), step, distance: haus });
                }
                max_step = max_step.max(step);
                if step >= step_bound.expect("depth above one") {
                    violations += 1;
                }
                (k, Some(step), Some(haus))
            };
            let point = values[traj].clone();
            cells.push(CellRecord {
                depth: m,
                indices: key.clone(),
                rep_time: t,
                trajectory: traj,
                point: point.clone(),
                step,
                hausdorff: haus,
            });
            chosen.insert(key.clone(), (point, values));
        }
        chain_log.push(DepthLog {
            depth: m,
            partition_size: levels[m - 1].len(),
            cells: reps[m - 1].len(),
            max_step,
            step_bound,
            bound_violations: violations,
            partition_residual: levels[m - 1].residual.value,
        });
    }

    let basis = product.basis()?;
    let mut sets = Vec::new();
    let mut branches = Vec::new();
    for c in cells.iter().filter(|c| c.depth == n_max) {
        let parts: Vec<Arc<SetExpr>> =
            c.indices.iter().enumerate().map(|(m, &j)| levels[m].sets[j].clone()).collect();
        locator.cells.insert(c.indices.clone(), sets.len());
        sets.push(SetExpr::intersect_all(&parts));
        branches.push(FuncExpr::constant(&basis, &c.point)?);
    }
    if sets.is_empty() {
        return Err(Error::invalid("no grid sample falls in a cell of every partition"));
    }
    let selection = FuncExpr::step(sets, branches, Some(Arc::new(locator)))?;

    let tail_bound = gammas.tail_bound(eps);
    let threshold = gammas.get(1) * eps + tail_bound;
    let (membership, nearness) = exceedances(map, g, &selection, eps, threshold, scheme)?;
    let mut module_report = map.stacked(std::slice::from_ref(g))?.freq_module()?;
    for p in &levels {
        module_report = module_report.sum(&p.module_report)?;
    }
    Ok(SelectionResult {
        selection,
        depth: n_max,
        eps,
        gammas,
        cells,
        chain_log,
        certificate: SelectionCertificate { tail_bound, membership_threshold: threshold, membership, nearness },
        partitions: levels,
        module_report,
    })
}

/// Densities of membership and nearness exceedances of a selection.
pub fn exceedances(
    map: &MultiMap,
    g: &FuncExpr,
    selection: &FuncExpr,
    eps: f64,
    threshold: f64,
    scheme: &AveragingScheme,
) -> Result<(AverageEstimate, AverageEstimate)> {
    let d = map.dim();
    let space = map.space();
    let grid = Grid::new(scheme);
    let mut sel = Vec::new();
    let mut gv = Vec::new();
    let mut traj: Vec<Vec<f64>> = vec![Vec::new(); map.len()];
    let avs = grid.averages(2, |span, out| {
        sel.resize(span.len * d, 0.0);
        gv.resize(span.len * d, 0.0);
        selection.eval_span(span, &mut sel)?;
        g.eval_span(span, &mut gv)?;
        for (f, buf) in map.trajectories().iter().zip(traj.iter_mut()) {
            buf.resize(span.len * d, 0.0);
            f.eval_span(span, buf)?;
        }
        for k in 0..span.len {
            let s = &sel[k * d..(k + 1) * d];
            let y = &gv[k * d..(k + 1) * d];
            let mut to_f = f64::INFINITY;
            let mut g_to_f = f64::INFINITY;
            for buf in &traj {
                let v = &buf[k * d..(k + 1) * d];
                to_f = to_f.min(space.dist(s, v));
                g_to_f = g_to_f.min(space.dist(y, v));
            }
            out[2 * k] = if to_f >= threshold { 1.0 } else { 0.0 };
            out[2 * k + 1] = if space.dist(s, y) >= g_to_f + eps { 1.0 } else { 0.0 };
        }
        Ok(())
    })?;
    let h = grid.horizons();
    let w = scheme.window();
    let a: Vec<f64> = avs.iter().map(|v| v[0]).collect();
    let b: Vec<f64> = avs.iter().map(|v| v[1]).collect();
    Ok((AverageEstimate::from_averages(&h, &a, w), AverageEstimate::from_averages(&h, &b, w)))
}
