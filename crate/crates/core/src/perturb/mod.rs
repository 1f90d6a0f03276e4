//! Periodic perturbations that thin out sublevel sets.

mod build;
mod lemma;
mod series;
mod tau0;

pub use build::{
    build_perturbation, infer_lattice, stage_amplitude, verify_level_density, PerturbOptions, PerturbationBuild,
    StageReport, AMPLITUDE_FACTOR,
};
pub use lemma::{lemma41_density, lemma41_params, lemma41_witness, Lemma41Params, LemmaWitness};
pub use series::{PerturbationSeries, SeriesRecord, Stage};
pub use tau0::{tau0_estimate, ProbeGrid, Tau0Estimate, PROBE_COUNT, PROBE_RATIO};
