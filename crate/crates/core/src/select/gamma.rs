use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Accuracies `gamma_n = 2^{-n} / 10` of the nested partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaSchedule {
    pub n_max: usize,
    /// `gamma_1 .. gamma_{n_max + 1}`.
    pub gammas: Vec<f64>,
}

pub fn gamma(n: usize) -> f64 {
    0.5f64.powi(n as i32) / 10.0
}

pub fn gamma_schedule(n_max: usize) -> Result<GammaSchedule> {
    if n_max == 0 {
        return Err(Error::invalid("n_max must be at least 1"));
    }
    Ok(GammaSchedule { n_max, gammas: (1..=n_max + 1).map(gamma).collect() })
}

impl GammaSchedule {
    /// `gamma_n` for `1 <= n <= n_max + 1`.
    pub fn get(&self, n: usize) -> f64 {
        self.gammas[n - 1]
    }

    /// `sum_{n <= n_max} (gamma_n + gamma_{n+1})`.
    pub fn partial_sum(&self) -> f64 {
        (1..=self.n_max).map(|n| self.get(n) + self.get(n + 1)).sum()
    }

    /// `2 sum_{n > n_max} (gamma_n + gamma_{n+1}) eps = 0.3 * 2^{-n_max} * eps`.
    pub fn tail_bound(&self, eps: f64) -> f64 {
        0.3 * 0.5f64.powi(self.n_max as i32) * eps
    }

    /// Bound on the step between depths `n - 1` and `n`.
    pub fn step_bound(&self, n: usize, eps: f64) -> f64 {
        2.0 * (self.get(n - 1) + self.get(n)) * eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_values() {
        let g = gamma_schedule(3).unwrap();
        assert_eq!(g.gammas, vec![0.05, 0.025, 0.0125, 0.00625]);
        assert!(g.partial_sum() < 1.0 / 6.0);
        assert!((gamma_schedule(1).unwrap().tail_bound(1.0) - 0.15).abs() < 1e-16);
        assert!(gamma_schedule(0).is_err());
    }

    #[test]
    fn tail_matches_long_sum() {
        for m in 1..8 {
            let g = gamma_schedule(m).unwrap();
            let long: f64 = (m + 1..200).map(|n| gamma(n) + gamma(n + 1)).sum();
            assert!((g.tail_bound(0.7) - 2.0 * long * 0.7).abs() < 1e-15);
        }
    }
}
