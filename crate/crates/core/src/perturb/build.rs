use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lemma::{lemma41_params, Lemma41Params};
use super::series::{PerturbationSeries, Stage};
use super::tau0::{tau0_estimate, ProbeGrid, Tau0Estimate};
use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::freq::FrequencyBasis;
use crate::metrics::{density, AverageEstimate, AveragingScheme, DensityMode};
use crate::sets::SetExpr;

/// Slack on the largest admissible amplitude of each later stage.
pub const AMPLITUDE_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbOptions {
    /// Scheme for the shift scans; defaults to the main scheme.
    pub probe_scheme: Option<AveragingScheme>,
    /// First probe for families without a symbolic Lipschitz bound.
    pub fallback_start: f64,
    /// Integer vector naming `2*pi/b` in the family's basis. Inferred when
    /// absent.
    pub lattice: Option<(Arc<FrequencyBasis>, Vec<i64>)>,
    /// Stage-zero scan of a function whose shift distances bound those of
    /// every family member, reused instead of scanning the family.
    pub stage0_tau0: Option<Tau0Estimate>,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions { probe_scheme: None, fallback_start: 1e-6, lattice: None, stage0_tau0: None }
    }
}

/// Diagnostics of one construction stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    pub params: Lemma41Params,
    pub tau0: Tau0Estimate,
    pub alpha_min: f64,
}

#[derive(Debug, Clone)]
pub struct PerturbationBuild {
    pub series: PerturbationSeries,
    pub reports: Vec<StageReport>,
}

/// Amplitude of stage `j` given the thresholds of the earlier stages.
pub fn stage_amplitude(delta_amp: f64, j: usize, thresholds: &[f64]) -> f64 {
    if j == 0 {
        return delta_amp / 2.0;
    }
    let mut cap = delta_amp * 0.5f64.powi(j as i32 + 1);
    for (k, &d) in thresholds.iter().enumerate().take(j) {
        cap = cap.min(d * 0.5f64.powi((j - k) as i32));
    }
    AMPLITUDE_FACTOR * cap
}

/// Smallest integer `m` with `m * 2*pi/b >= pi / tau0`, ties moving up.
fn lattice_multiple(b: f64, tau0: f64) -> f64 {
    let x = b / (2.0 * tau0);
    let mut m = x.floor() + 1.0;
    if m <= x {
        m = f64::from_bits(x.to_bits() + 1);
    }
    while m * (TAU / b) < PI / tau0 {
        m = f64::from_bits(m.to_bits() + 1).floor().max(m + 1.0);
    }
    m
}

/// Finds `k e_i` with `k * beta_i = 2*pi/b` for small `k`.
pub fn infer_lattice(basis: &Arc<FrequencyBasis>, b: f64) -> Option<Vec<i64>> {
    let target = TAU / b;
    for i in 0..basis.rank() {
        for k in 1..=16i64 {
            let v = k as f64 * basis.element(i);
            if (v - target).abs() <= 1e-12 * target.max(1.0) {
                let mut g = vec![0; basis.rank()];
                g[i] = k;
                return Some(g);
            }
        }
    }
    None
}

/// Builds `g(t) = sum_{j <= depth} Delta_j sin(alpha_j t)` for a scalar family.
///
/// Stage `j` targets density `2^{-j-1}` for the family
/// `f + sum_{k < j} Delta_k sin(alpha_k t)` and records the threshold
/// `delta_j` at which the target holds under any further perturbation of sup
/// norm at most `delta_j`.
pub fn build_perturbation(
    family: &[FuncExpr],
    delta_amp: f64,
    b: f64,
    depth: usize,
    scheme: &AveragingScheme,
    options: &PerturbOptions,
) -> Result<PerturbationBuild> {
    if family.is_empty() {
        return Err(Error::invalid("family must be non-empty"));
    }
    if let Some(f) = family.iter().find(|f| f.dim() != 1) {
        return Err(Error::DimMismatch { expected: 1, found: f.dim() });
    }
    if !(delta_amp > 0.0 && delta_amp.is_finite()) {
        return Err(Error::invalid("Delta must be positive and finite"));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid("period b must be positive and finite"));
    }
    let lattice = match &options.lattice {
        Some(l) => Some(l.clone()),
        None => family[0].basis().ok().and_then(|basis| infer_lattice(&basis, b).map(|g| (basis, g))),
    };
    let probe_scheme = options.probe_scheme.as_ref().unwrap_or(scheme);

    let mut stages: Vec<Stage> = Vec::new();
    let mut reports = Vec::new();
    for j in 0..=depth {
        let thresholds: Vec<f64> = stages.iter().map(|s| s.threshold).collect();
        let amp = stage_amplitude(delta_amp, j, &thresholds);
        if !amp.is_normal() {
            return Err(Error::ScheduleUnderflow { stage: j, reason: format!("amplitude {amp:e}") });
        }
        let eps = 0.5f64.powi(j as i32 + 1);
        let params = lemma41_params(eps, amp)?;
        // Halving leaves room for a later perturbation of size delta_j.
        let threshold = params.delta / 2.0;
        let bound = params.tau_bound();
        if !(threshold.is_normal() && bound.is_normal()) {
            return Err(Error::ScheduleUnderflow { stage: j, reason: format!("threshold {threshold:e}") });
        }
        let members: Vec<FuncExpr> = if stages.is_empty() {
            family.to_vec()
        } else {
            let partial = Arc::new(PerturbationSeries::new(b, delta_amp, stages.clone(), lattice.clone())?);
            family.iter().map(|f| f.perturbed(partial.clone())).collect::<Result<_>>()?
        };
        let stage_err = |e: Error| Error::Stage { stage: j, source: Box::new(e) };
        let tau0 = match (&options.stage0_tau0, j) {
            (Some(shared), 0) => shared.clone(),
            _ => {
                let probes = ProbeGrid::for_family(&members, bound, options.fallback_start).map_err(stage_err)?;
                tau0_estimate(&members, bound, probe_scheme, &probes).map_err(stage_err)?
            }
        };
        let multiple = lattice_multiple(b, tau0.tau0);
        if !multiple.is_finite() {
            return Err(Error::ScheduleUnderflow { stage: j, reason: format!("tau0 {:e}", tau0.tau0) });
        }
        stages.push(Stage { amplitude: amp, multiple, threshold, tau0: tau0.tau0 });
        reports.push(StageReport { stage: j, params, alpha_min: PI / tau0.tau0, tau0 });
    }
    let series = PerturbationSeries::new(b, delta_amp, stages, lattice)?;
    Ok(PerturbationBuild { series, reports })
}

/// `kappa({t : |f(t) + g(t)| < delta_j})`, to be compared with `2^{-j-1}`.
pub fn verify_level_density(
    f: &FuncExpr,
    series: &PerturbationSeries,
    stage: usize,
    scheme: &AveragingScheme,
) -> Result<AverageEstimate> {
    if stage > series.depth() {
        return Err(Error::invalid(format!("stage {stage} exceeds depth {}", series.depth())));
    }
    let threshold = series.stages()[stage].threshold;
    let set = SetExpr::band(f.perturbed(Arc::new(series.clone()))?, threshold)?;
    density(&set, scheme, DensityMode::Set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_schedule() {
        assert_eq!(stage_amplitude(1.0, 0, &[]), 0.5);
        assert_eq!(stage_amplitude(1.0, 1, &[1.0]), 0.9 * 0.25);
        assert_eq!(stage_amplitude(1.0, 1, &[0.01]), 0.9 * 0.005);
        assert_eq!(stage_amplitude(1.0, 2, &[0.01, 0.001]), 0.9 * 0.0005);
    }

    #[test]
    fn multiples_round_up() {
        // pi / tau0 = 2 exactly on the lattice of step 1: tie moves up
        assert_eq!(lattice_multiple(TAU, PI / 2.0), 3.0);
        assert_eq!(lattice_multiple(TAU, PI / 2.5), 3.0);
        let m = lattice_multiple(TAU, 1e-30);
        assert!(m * 1.0 >= PI / 1e-30);
    }

    #[test]
    fn lattice_inference() {
        let basis = Arc::new(FrequencyBasis::new(vec![1.0, 2f64.sqrt()]).unwrap());
        assert_eq!(infer_lattice(&basis, TAU), Some(vec![1, 0]));
        assert_eq!(infer_lattice(&basis, TAU / (3.0 * 2f64.sqrt())), Some(vec![0, 3]));
        assert_eq!(infer_lattice(&basis, 1.0), None);
    }

    #[test]
    fn zero_family_single_stage() {
        let basis = Arc::new(FrequencyBasis::new(vec![1.0]).unwrap());
        let zero = FuncExpr::constant(&basis, &[0.0]).unwrap();
        let scheme = AveragingScheme::new(vec![100.0, 200.0], 1.0 / 64.0, 1).unwrap();
        let built = build_perturbation(std::slice::from_ref(&zero), 1.0, TAU, 0, &scheme, &PerturbOptions::default()).unwrap();
        let s = &built.series;
        assert_eq!(s.amplitudes(), vec![0.5]);
        assert_eq!(s.lattice().unwrap().1, vec![1]);
        let k = verify_level_density(&zero, s, 0, &scheme).unwrap();
        assert!(k.value < 0.5, "{}", k.value);
    }
}
