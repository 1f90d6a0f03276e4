use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::tau0::{tau0_estimate, ProbeGrid, Tau0Estimate};
use super::PerturbationSeries;
use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::metrics::{density, AverageEstimate, AveragingScheme, DensityMode};
use crate::sets::SetExpr;

/// Constants of the sublevel-density lemma for a target `eps` and amplitude
/// `delta_amp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma41Params {
    pub eps: f64,
    #[serde(rename = "Delta")]
    pub delta_amp: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub eps_prime: f64,
    pub delta_prime: f64,
    pub delta: f64,
}

impl Lemma41Params {
    /// Shift distance below which the family must stay: `eps' * delta`.
    pub fn tau_bound(&self) -> f64 {
        self.eps_prime * self.delta
    }
}

pub fn lemma41_params(eps: f64, delta_amp: f64) -> Result<Lemma41Params> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(delta_amp > 0.0 && delta_amp.is_finite()) {
        return Err(Error::invalid(format!("Delta must be positive and finite, got {delta_amp}")));
    }
    // smallest N with 1/(N+1) < eps/2
    let mut n = (2.0 / eps).floor() as u64;
    while 1.0 / ((n + 1) as f64) >= eps / 2.0 {
        n += 1;
    }
    while n > 1 && 1.0 / (n as f64) < eps / 2.0 {
        n -= 1;
    }
    let nf = n as f64;
    let eps_prime = eps / (2.0 * nf * (nf + 1.0));
    let delta_prime = 2.0 * (PI / (2.0 * nf)).sin() * (PI * eps_prime / 2.0).sin();
    let delta = (delta_prime * delta_amp / 3.0).min(1.0);
    Ok(Lemma41Params { eps, delta_amp, n, eps_prime, delta_prime, delta })
}

/// A frequency that satisfies the lemma for `family`, found by estimating the
/// shift threshold `tau0` and taking `alpha = pi / tau0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaWitness {
    pub params: Lemma41Params,
    pub tau0: Tau0Estimate,
    pub alpha: f64,
}

pub fn lemma41_witness(
    family: &[FuncExpr],
    eps: f64,
    delta_amp: f64,
    scheme: &AveragingScheme,
    fallback_start: f64,
) -> Result<LemmaWitness> {
    let params = lemma41_params(eps, delta_amp)?;
    let probes = ProbeGrid::for_family(family, params.tau_bound(), fallback_start)?;
    let tau0 = tau0_estimate(family, params.tau_bound(), scheme, &probes)?;
    let alpha = PI / tau0.tau0;
    Ok(LemmaWitness { params, tau0, alpha })
}

/// `kappa({t : |f(t) + Delta sin(alpha t)| < delta})`.
pub fn lemma41_density(
    f: &FuncExpr,
    delta_amp: f64,
    alpha: f64,
    delta: f64,
    scheme: &AveragingScheme,
) -> Result<AverageEstimate> {
    let g = PerturbationSeries::single(delta_amp, alpha)?;
    let set = SetExpr::band(f.perturbed(std::sync::Arc::new(g))?, delta)?;
    density(&set, scheme, DensityMode::Set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_follow_the_formulas() {
        let p = lemma41_params(0.5, 1.0).unwrap();
        assert_eq!(p.n, 4);
        assert_eq!(p.eps_prime, 0.0125);
        let dp = 2.0 * (PI / 8.0).sin() * (PI / 160.0).sin();
        assert_eq!(p.delta_prime, dp);
        assert_eq!(p.delta, dp / 3.0);
        let q = lemma41_params(1.0, 1.0).unwrap();
        assert_eq!(q.n, 2);
        assert!((q.eps_prime - 1.0 / 12.0).abs() < 1e-17);
    }

    #[test]
    fn n_is_minimal() {
        for k in 1..200 {
            let eps = k as f64 / 200.0;
            let p = lemma41_params(eps, 1.0).unwrap();
            let n = p.n as f64;
            assert!(1.0 / (n + 1.0) < eps / 2.0);
            assert!(1.0 / n >= eps / 2.0, "eps {eps} n {n}");
        }
    }

    #[test]
    fn delta_is_capped_at_one() {
        assert_eq!(lemma41_params(1.0, 1e6).unwrap().delta, 1.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(lemma41_params(0.0, 1.0).is_err());
        assert!(lemma41_params(1.5, 1.0).is_err());
        assert!(lemma41_params(0.5, 0.0).is_err());
        assert!(lemma41_params(0.5, f64::NAN).is_err());
    }
}
