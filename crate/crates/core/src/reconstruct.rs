//! End-to-end reconstruction: samples to coefficients to a bandlimited estimate,
//! with success classification by condition number, plus success-probability sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    gap_profile, random_topology, regular_topology, sample_signal, BandlimitedSignal, SampleSet, Support,
};
use crate::linsys::{build_system, eig_hermitian, solve, DEFAULT_KAPPA_MAX};
use crate::seed;
use crate::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub weighted: bool,
    pub kappa_max: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { weighted: false, kappa_max: DEFAULT_KAPPA_MAX }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    #[serde(rename = "M")]
    pub harmonics: usize,
    pub r: usize,
    pub weighted: bool,
    /// `â_k` for `k = -M..=M`.
    pub coeffs_hat: Vec<Complex64>,
    /// Condition number of the system that was solved.
    pub kappa: f64,
    pub min_eig: f64,
    pub success: bool,
    /// `‖a - â‖₂ / ‖a‖₂` when the true signal is known.
    pub rel_l2_error: Option<f64>,
    pub delta: f64,
    /// `(2M+1)/r`.
    pub beta: f64,
    pub kappa_unweighted: Option<f64>,
    pub kappa_weighted: Option<f64>,
    pub refinement_steps: usize,
}

impl ReconstructionReport {
    /// The reconstructed signal `p̂(t)`.
    pub fn signal(&self) -> Result<BandlimitedSignal> {
        BandlimitedSignal::new(self.coeffs_hat.clone(), false)
    }

    /// Fills in the condition number of the variant that was not solved.
    pub fn with_both_kappas(mut self, samples: &SampleSet) -> Result<Self> {
        let other = !self.weighted;
        if other && samples.len() < 2 {
            return Ok(self);
        }
        let kappa = eig_hermitian(&build_system(samples, self.harmonics, other)?)?.kappa;
        if other {
            self.kappa_weighted = Some(kappa);
        } else {
            self.kappa_unweighted = Some(kappa);
        }
        Ok(self)
    }
}

/// Relative coefficient error, aligning both vectors by harmonic index. Falls back
/// to the absolute error when the reference is zero.
pub fn relative_coefficient_error(truth: &BandlimitedSignal, estimate: &[Complex64]) -> f64 {
    let m_hat = (estimate.len() / 2) as i64;
    let m = truth.harmonics() as i64;
    let top = m.max(m_hat);
    let (mut num, mut den) = (0.0, 0.0);
    for k in -top..=top {
        let a = truth.coeff(k);
        let b = if k.abs() <= m_hat { estimate[(k + m_hat) as usize] } else { Complex64::new(0.0, 0.0) };
        num += (a - b).norm_sqr();
        den += a.norm_sqr();
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Reconstructs the `M`-harmonic signal best matching `samples`.
///
/// `success` is purely `κ ≤ kappa_max`; the error against `truth` is reported separately.
pub fn reconstruct(
    samples: &SampleSet,
    harmonics: usize,
    options: ReconstructOptions,
    truth: Option<&BandlimitedSignal>,
) -> Result<ReconstructionReport> {
    let r = samples.len();
    if r == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let delta = if r >= 2 { gap_profile(samples.positions())?.delta } else { 1.0 };
    let system = build_system(samples, harmonics, options.weighted)?;
    let sol = solve(&system, options.kappa_max)?;
    let kappa = sol.diagnostics.kappa;
    Ok(ReconstructionReport {
        harmonics,
        r,
        weighted: options.weighted,
        rel_l2_error: truth.map(|t| relative_coefficient_error(t, &sol.coeffs)),
        coeffs_hat: sol.coeffs,
        kappa,
        min_eig: sol.diagnostics.min_eig,
        success: !sol.diagnostics.ill_conditioned,
        delta,
        beta: (2 * harmonics + 1) as f64 / r as f64,
        kappa_unweighted: (!options.weighted).then_some(kappa),
        kappa_weighted: options.weighted.then_some(kappa),
        refinement_steps: sol.diagnostics.refinement_steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    /// i.i.d. uniform positions on the support.
    Random(Support),
    /// Equally spaced positions `(q-1)/r`.
    Regular,
}

impl Topology {
    pub fn positions(&self, r: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            Topology::Random(s) => random_topology(r, *s, seed),
            Topology::Regular => regular_topology(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    #[serde(rename = "M_list")]
    pub harmonics: Vec<usize>,
    #[serde(rename = "r_list")]
    pub samples: Vec<usize>,
    pub topology: Topology,
    pub trials: usize,
    pub weighted: bool,
    pub kappa_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    #[serde(rename = "M")]
    pub harmonics: usize,
    pub r: usize,
    pub beta: f64,
    pub trials: usize,
    pub success_frac: f64,
    /// Mean `κ` over successful trials; NaN when none succeeded.
    pub mean_kappa_success: f64,
    pub mean_delta: f64,
}

struct TrialOutcome {
    success: bool,
    kappa: f64,
    delta: f64,
}

/// Seed of trial `trial` in cell `cell`: `child(child(master, cell), trial)`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    seed::child(seed::child(master, cell as u64), trial as u64)
}

/// One reconstruction of a fresh random real signal; the signal draws from
/// `child(s, 0)` and the topology from `child(s, 1)`.
fn sweep_trial(grid: &SweepGrid, harmonics: usize, r: usize, s: u64) -> Result<TrialOutcome> {
    let mut rng = seed::rng(seed::child(s, 0));
    let signal = BandlimitedSignal::random_real(harmonics, &mut rng);
    let positions = grid.topology.positions(r, seed::child(s, 1))?;
    let samples = sample_signal(&signal, &positions)?;
    let options = ReconstructOptions { weighted: grid.weighted, kappa_max: grid.kappa_max };
    let report = reconstruct(&samples, harmonics, options, None)?;
    Ok(TrialOutcome { success: report.success, kappa: report.kappa, delta: report.delta })
}

/// Success fraction, mean successful `κ` and mean gap for every `(M, r)` cell,
/// cells in `M`-major order. Trials run in parallel and are merged by
/// `(cell, trial)` index, so results depend only on `seed`.
pub fn sweep(grid: &SweepGrid, seed: u64) -> Result<Vec<SweepCell>> {
    if grid.harmonics.is_empty() || grid.samples.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    if grid.trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let cells: Vec<(usize, usize)> =
        grid.harmonics.iter().flat_map(|&m| grid.samples.iter().map(move |&r| (m, r))).collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..grid.trials).map(move |t| (c, t))).collect();
    let outcomes: Vec<TrialOutcome> = jobs
        .par_iter()
        .map(|&(c, t)| sweep_trial(grid, cells[c].0, cells[c].1, trial_seed(seed, c, t)))
        .collect::<Result<_>>()?;
    Ok(cells
        .iter()
        .zip(outcomes.chunks_exact(grid.trials))
        .map(|(&(m, r), trials)| {
            let n = trials.len() as f64;
            let wins: Vec<f64> = trials.iter().filter(|o| o.success).map(|o| o.kappa).collect();
            SweepCell {
                harmonics: m,
                r,
                beta: (2 * m + 1) as f64 / r as f64,
                trials: trials.len(),
                success_frac: wins.len() as f64 / n,
                mean_kappa_success: if wins.is_empty() {
                    f64::NAN
                } else {
                    wins.iter().sum::<f64>() / wins.len() as f64
                },
                mean_delta: trials.iter().map(|o| o.delta).sum::<f64>() / n,
            }
        })
        .collect())
}
