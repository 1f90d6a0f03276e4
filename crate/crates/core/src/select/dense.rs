use super::build::{build_selection, SelectionResult};
use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::metrics::AveragingScheme;
use crate::multimap::MultiMap;
use crate::partition::{cover_bundle, PartitionOptions};

/// Selections `f_{k,n}` with `rho(f_{k,n}, x_k) < 2^{-n} + rho(x_k, F)` for
/// anchors `x_k` covering the values of `F` within `anchor_delta`.
pub fn dense_selections(
    map: &MultiMap,
    anchor_delta: f64,
    levels: usize,
    n_max: usize,
    scheme: &AveragingScheme,
    options: &PartitionOptions,
) -> Result<Vec<SelectionResult>> {
    let metric = map.space().point_metric();
    let cover = cover_bundle(map.trajectories(), anchor_delta, options.resid_target, &metric, scheme, options.max_centers)?;
    dense_selections_at(map, &cover.centers, levels, n_max, scheme, options)
}

/// As `dense_selections`, with explicit anchors. Results are ordered by
/// anchor and then by `n = 1..=levels`.
pub fn dense_selections_at(
    map: &MultiMap,
    anchors: &[Vec<f64>],
    levels: usize,
    n_max: usize,
    scheme: &AveragingScheme,
    options: &PartitionOptions,
) -> Result<Vec<SelectionResult>> {
    if anchors.is_empty() || levels == 0 {
        return Err(Error::invalid("need at least one anchor and one level"));
    }
    let basis = map.trajectories()[0].basis()?;
    let mut out = Vec::with_capacity(anchors.len() * levels);
    for x in anchors {
        let g = FuncExpr::constant(&basis, x)?;
        for n in 1..=levels {
            out.push(build_selection(map, &g, 0.5f64.powi(n as i32), n_max, scheme, options)?);
        }
    }
    Ok(out)
}
