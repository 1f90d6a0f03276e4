//! Numerical toolkit for Besicovitch almost periodic functions with values in
//! a metric space.
//!
//! * [`expr`]: function expressions built from trigonometric polynomials.
//! * [`metrics`]: long-horizon time averages, Besicovitch/Stepanov/uniform
//!   distances, Fourier-Bohr coefficients, densities and almost periods.
//! * [`perturb`]: small periodic perturbations that thin out level sets.
//! * [`partition`]: partitions of the line adapted to a function.
//! * [`select`]: nested selections from families of trajectories.

pub mod error;
pub mod expr;
pub mod freq;
pub mod invariants;
pub mod metrics;
pub mod multimap;
pub mod partition;
pub mod perturb;
pub mod phase;
pub mod schema;
pub mod select;
pub mod sets;
pub mod space;

pub use error::{Error, Result};
pub use expr::{FuncExpr, Span, TrigBuilder, TrigPoly, TrigTerm};
pub use freq::{FrequencyBasis, FrequencyModule};
pub use metrics::{AverageEstimate, AveragingScheme};
pub use multimap::MultiMap;
pub use perturb::PerturbationSeries;
pub use sets::{Relation, SetExpr};
pub use space::{MetricKind, MetricSpace, PointMetric};
