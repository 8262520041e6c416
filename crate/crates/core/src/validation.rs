//! Side-by-side moment comparison: Monte Carlo estimate, exact finite-size value and
//! the asymptotic polynomial, for one `(M, β)` pair.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::moments::{finite_moment, moment_polynomial};
use crate::spectral::{empirical_moments, run_ensemble, EnsembleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub beta: f64,
    pub p: usize,
    /// Monte Carlo `E[λ^p]`; absent when no trials were requested.
    pub sim: Option<f64>,
    pub sim_std_err: Option<f64>,
    /// Exact value at `(M, r)` with `r = round((2M+1)/β)`.
    pub exact: f64,
    /// Polynomial limit evaluated at the requested `β`.
    pub limit: f64,
    #[serde(rename = "M")]
    pub harmonics: usize,
    pub r: usize,
    pub realized_beta: f64,
}

/// Rows `p = 1..=p_max` for one `β`. With `trials = 0` the simulation column is skipped.
pub fn moment_comparison(
    harmonics: usize,
    beta: f64,
    p_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<MomentRow>> {
    let spec = EnsembleSpec::new(harmonics, beta, trials.max(1), seed)?;
    let sim = if trials > 0 { Some(empirical_moments(&run_ensemble(&spec)?, p_max)?) } else { None };
    (1..=p_max)
        .map(|p| {
            let est = sim.as_ref().map(|s| s[p - 1]);
            Ok(MomentRow {
                beta,
                p,
                sim: est.map(|e| e.mean),
                sim_std_err: est.map(|e| e.std_err),
                exact: finite_moment(p, harmonics, spec.r)?,
                limit: moment_polynomial(p)?.evaluate(beta),
                harmonics,
                r: spec.r,
                realized_beta: spec.realized_beta,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_agree_on_first_two_moments() {
        let rows = moment_comparison(20, 0.5, 3, 40, 11).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].exact, 1.0);
        assert_eq!(rows[0].limit, 1.0);
        assert!((rows[0].sim.unwrap() - 1.0).abs() < 1e-12);
        // 1 + 2M/r against 1 + β
        assert!((rows[1].exact - (1.0 + 40.0 / 82.0)).abs() < 1e-14);
        assert!((rows[1].limit - 1.5).abs() < 1e-15);
        let se = rows[1].sim_std_err.unwrap();
        assert!((rows[1].sim.unwrap() - rows[1].exact).abs() < 4.0 * se + 1e-12);
    }

    #[test]
    fn simulation_column_is_optional() {
        let rows = moment_comparison(200, 0.75, 2, 0, 0).unwrap();
        assert!(rows.iter().all(|r| r.sim.is_none()));
        assert_eq!(rows[0].r, 535);
    }
}
