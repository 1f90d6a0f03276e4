//! Selections of finitely generated multivalued maps.

mod build;
mod dense;
mod gamma;

pub use build::{build_selection, exceedances, CellRecord, DepthLog, SelectionCertificate, SelectionResult};
pub use dense::{dense_selections, dense_selections_at};
pub use gamma::{gamma, gamma_schedule, GammaSchedule};
