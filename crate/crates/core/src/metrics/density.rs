use serde::{Deserialize, Serialize};

use super::quadrature::Grid;
use super::{AverageEstimate, AveragingScheme};
use crate::error::Result;
use crate::sets::SetExpr;

/// Which density to estimate for a set `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityMode {
    /// Upper density of `T` itself.
    Set,
    /// Upper density of the complement of `T`.
    Complement,
}

/// Windowed lim sup of `|T ∩ [-b, b]| / 2b` (or of the complement).
pub fn density(set: &SetExpr, scheme: &AveragingScheme, mode: DensityMode) -> Result<AverageEstimate> {
    let grid = Grid::new(scheme);
    let mut mask = Vec::new();
    let avs = grid.averages(1, |span, out| {
        mask.resize(span.len, false);
        set.contains_span(span, &mut mask)?;
        for (o, &m) in out.iter_mut().zip(&mask) {
            let inside = m != (mode == DensityMode::Complement);
            *o = if inside { 1.0 } else { 0.0 };
        }
        Ok(())
    })?;
    let avs: Vec<f64> = avs.into_iter().map(|v| v[0]).collect();
    Ok(AverageEstimate::from_averages(&grid.horizons(), &avs, scheme.window()))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::expr::FuncExpr;
    use crate::freq::FrequencyBasis;
    use crate::sets::Relation;

    fn scheme() -> AveragingScheme {
        AveragingScheme::new(vec![100.0, 200.0, 400.0], 1.0 / 128.0, 2).unwrap()
    }

    #[test]
    fn half_line_of_sine() {
        let b = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let s = FuncExpr::sin(&b, &[1], 1.0).unwrap();
        let pos = SetExpr::level(s, 0.0, Relation::Lt).unwrap();
        let d = density(&pos, &scheme(), DensityMode::Set).unwrap();
        assert!((d.value - 0.5).abs() < 0.01);
        let c = density(&pos, &scheme(), DensityMode::Complement).unwrap();
        assert!((c.value - 0.5).abs() < 0.01);
    }

    #[test]
    fn trivial_sets() {
        assert_eq!(density(&SetExpr::Empty, &scheme(), DensityMode::Set).unwrap().value, 0.0);
        assert_eq!(density(&SetExpr::FullLine, &scheme(), DensityMode::Complement).unwrap().value, 0.0);
        assert_eq!(density(&SetExpr::FullLine, &scheme(), DensityMode::Set).unwrap().value, 1.0);
    }
}
