use besicovitch::metrics::AlmostPeriodMetric;
use besicovitch::schema::{BasisSpec, ExprSpec, RealSpec, SchemeSpec, SpaceSpec};
use besicovitch::space::MetricKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Scenario {
    Metrics,
    AlmostPeriods,
    Perturb,
    Partition,
    Select,
    Verify,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Metrics => "metrics",
            Scenario::AlmostPeriods => "almost_periods",
            Scenario::Perturb => "perturb",
            Scenario::Partition => "partition",
            Scenario::Select => "select",
            Scenario::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub space: Option<SpaceSpec>,
    #[serde(default)]
    pub scheme: Option<SchemeSpec>,
    #[serde(default)]
    pub inputs: serde_json::Value,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn one() -> f64 {
    1.0
}

fn default_tol() -> f64 {
    0.02
}

/// An expected value with an absolute tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: RealSpec,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsInputs {
    pub basis: BasisSpec,
    pub f: ExprSpec,
    pub g: ExprSpec,
    #[serde(default = "one")]
    pub p: f64,
    /// Frequencies at which to estimate Fourier-Bohr coefficients of `f`.
    #[serde(default)]
    pub lambdas: Vec<RealSpec>,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlmostPeriodInputs {
    pub basis: BasisSpec,
    pub f: ExprSpec,
    pub eps: f64,
    pub metric: AlmostPeriodMetric,
    pub tau_max: f64,
    pub tau_step: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbInputs {
    pub basis: BasisSpec,
    pub family: Vec<ExprSpec>,
    #[serde(rename = "Delta")]
    pub delta_amp: f64,
    /// Single-stage mode: target density `eps` for one sine term.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Series mode: period and depth of the perturbation.
    #[serde(default)]
    pub b: Option<RealSpec>,
    #[serde(default, rename = "J")]
    pub depth: Option<usize>,
    #[serde(default)]
    pub probe_scheme: Option<SchemeSpec>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Random times for the periodicity check.
    #[serde(default = "default_period_checks")]
    pub period_checks: usize,
}

fn default_period_checks() -> usize {
    1000
}

/// `count` sample times `start + k * spacing`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub start: f64,
    pub spacing: f64,
    pub count: usize,
}

impl SampleSpec {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.start + self.spacing * k as f64)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSettings {
    #[serde(default = "default_depth", rename = "J")]
    pub depth: usize,
    #[serde(default = "default_resid")]
    pub resid_target: f64,
    #[serde(default = "default_max_centers")]
    pub max_centers: usize,
    #[serde(default)]
    pub period: Option<RealSpec>,
    #[serde(default)]
    pub probe_scheme: Option<SchemeSpec>,
}

impl Default for PartitionSettings {
    fn default() -> Self {
        PartitionSettings {
            depth: default_depth(),
            resid_target: default_resid(),
            max_centers: default_max_centers(),
            period: None,
            probe_scheme: None,
        }
    }
}

fn default_depth() -> usize {
    1
}

fn default_resid() -> f64 {
    0.05
}

fn default_max_centers() -> usize {
    besicovitch::partition::DEFAULT_MAX_CENTERS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionInputs {
    pub basis: BasisSpec,
    pub f: ExprSpec,
    pub eps: f64,
    #[serde(default)]
    pub options: PartitionSettings,
    pub samples: SampleSpec,
    /// Required share of outside samples farther than `eps / 3` from every center.
    #[serde(default = "default_separation")]
    pub separation_rate: f64,
}

fn default_separation() -> f64 {
    0.995
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectInputs {
    pub basis: BasisSpec,
    pub trajectories: Vec<ExprSpec>,
    pub g: ExprSpec,
    pub eps: f64,
    pub n_max: usize,
    #[serde(default)]
    pub options: PartitionSettings,
    pub samples: SampleSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyInputs {
    #[serde(default = "default_seeds")]
    pub seeds: usize,
}

fn default_seeds() -> usize {
    1
}

/// Metric used for partition centers.
pub fn point_metric(space: &SpaceSpec) -> besicovitch::PointMetric {
    match space.metric {
        MetricKind::Euclidean => besicovitch::PointMetric::Euclidean,
        MetricKind::Capped => besicovitch::PointMetric::Capped,
    }
}
