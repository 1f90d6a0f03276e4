//! Almost periodic partitions of the line adapted to a function.

mod cover;
mod family;
mod level;

pub use cover::{cover_bundle, cover_points, Cover, DEFAULT_MAX_CENTERS};
pub use family::{build_partition, PartitionFamily, PartitionOptions, CONSTANT_TOL};
pub use level::{level_split, LevelSplit};
