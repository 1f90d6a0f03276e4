use std::sync::Arc;

use super::family::PartitionOptions;
use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::metrics::AveragingScheme;
use crate::perturb::{build_perturbation, PerturbOptions, PerturbationSeries};
use crate::sets::{Relation, SetExpr};

#[derive(Debug, Clone)]
pub struct LevelSplit {
    /// `T` with `f < a + eps` on `T` and `f > a` off `T`.
    pub set: Arc<SetExpr>,
    /// The perturbation used, absent for constant input.
    pub series: Option<Arc<PerturbationSeries>>,
}

/// Splits the line by the level `a` of a scalar `f` with slack `eps`.
pub fn level_split(
    f: &FuncExpr,
    a: f64,
    eps: f64,
    scheme: &AveragingScheme,
    options: &PartitionOptions,
) -> Result<LevelSplit> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !a.is_finite() {
        return Err(Error::invalid("level must be finite"));
    }
    if f.dim() != 1 {
        return Err(Error::DimMismatch { expected: 1, found: f.dim() });
    }
    if let Some(c) = f.constant_value() {
        let set = if c[0] < a + eps / 2.0 { SetExpr::FullLine } else { SetExpr::Empty };
        return Ok(LevelSplit { set: Arc::new(set), series: None });
    }
    let basis = f.basis()?;
    let module = f.freq_module()?;
    let (b, lattice) = match options.period {
        Some(b) => (b, None),
        None => {
            let g = module
                .generators()
                .first()
                .ok_or_else(|| Error::invalid("non-constant function with an empty frequency module"))?
                .clone();
            let beta = basis.frequency(&g)?;
            let g = if beta < 0.0 { g.iter().map(|c| -c).collect() } else { g };
            (std::f64::consts::TAU / beta.abs(), Some(g))
        }
    };
    let mut popts: PerturbOptions = options.perturb.clone();
    if let Some(g) = lattice {
        popts.lattice = Some((basis.clone(), g));
    }
    let h = f.add(&FuncExpr::constant(&basis, &[-a - eps / 2.0])?)?;
    let built = build_perturbation(std::slice::from_ref(&h), eps / 3.0, b, options.depth, scheme, &popts)?;
    let g = Arc::new(built.series);
    let lower = Arc::new(SetExpr::level(h.perturbed(g.clone())?, 0.0, Relation::Le)?);
    let guard = Arc::new(SetExpr::level(f.clone(), a + eps, Relation::Lt)?);
    Ok(LevelSplit { set: SetExpr::intersect(lower, guard), series: Some(g) })
}
