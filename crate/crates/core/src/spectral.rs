//! Monte Carlo ensembles of the random sampling matrix `T` and their statistics:
//! pooled eigenvalue distributions, minimum eigenvalues, condition numbers,
//! power-law tail fits and the union-bound and mirror-relation checks.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{random_topology, Support};
use crate::linsys::{dense_from_generators, hermitian_eigenvalues, toeplitz_generators, EigenSpectrum};
use crate::seed;

/// Eigenvalues below this are treated as numerically zero by tail fits.
pub const TAIL_FLOOR: f64 = 1e-15;

/// Default anchor probability for [`fit_tail`].
pub const DEFAULT_TAIL_ANCHOR: f64 = 1e-2;

/// Default offset between `log10 κ` and `-log10 λ_min`.
pub const DEFAULT_MIRROR_D: f64 = 1.0 / 3.0;

/// Log-histogram resolution used by the mirror checks.
pub const LOG_BINS_PER_DECADE: usize = 20;

/// Populated log-bins each histogram needs before densities are compared.
pub const MIN_LOG_BINS: usize = 20;

/// Ensemble parameters. `r = round((2M+1)/β)`, and the ratio actually simulated is
/// kept as `realized_beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    #[serde(rename = "M")]
    pub harmonics: usize,
    pub beta: f64,
    pub trials: usize,
    pub seed: u64,
    pub r: usize,
    pub realized_beta: f64,
}

impl EnsembleSpec {
    pub fn new(harmonics: usize, beta: f64, trials: usize, seed: u64) -> Result<Self> {
        if harmonics == 0 {
            return Err(Error::InvalidArgument("M must be positive".into()));
        }
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::InvalidArgument(format!("beta must lie in (0, 2], got {beta}")));
        }
        let n = 2 * harmonics + 1;
        let r = ((n as f64 / beta).round() as usize).max(1);
        Self::from_samples(harmonics, r, trials, seed).map(|s| Self { beta, ..s })
    }

    /// Ensemble with an explicit sample count; `beta` is set to the realized ratio.
    pub fn from_samples(harmonics: usize, r: usize, trials: usize, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidArgument("trials must be positive".into()));
        }
        if r == 0 {
            return Err(Error::InvalidArgument("r must be positive".into()));
        }
        let realized_beta = (2 * harmonics + 1) as f64 / r as f64;
        Ok(Self { harmonics, beta: realized_beta, trials, seed, r, realized_beta })
    }

    /// Matrix size `2M + 1`.
    pub fn dim(&self) -> usize {
        2 * self.harmonics + 1
    }
}

/// Raw spectra of an ensemble; successful trials only, in trial order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEnsemble {
    pub spec: EnsembleSpec,
    /// Trial indices that produced a spectrum.
    pub trial_ids: Vec<usize>,
    /// Concatenated ascending spectra, `dim` values per successful trial.
    pub all_eigenvalues: Vec<f64>,
    pub min_eigs: Vec<f64>,
    pub kappas: Vec<f64>,
    /// Trials whose eigensolve failed and were skipped.
    pub failures: usize,
}

/// Spectrum of one trial of `spec`.
pub fn trial_spectrum(spec: &EnsembleSpec, trial: usize) -> Result<EigenSpectrum> {
    let positions = random_topology(spec.r, Support::UNIT, seed::child(spec.seed, trial as u64))?;
    let gens = toeplitz_generators(&positions, spec.harmonics);
    let dense = dense_from_generators(spec.harmonics, &gens);
    EigenSpectrum::from_raw(hermitian_eigenvalues(&dense)?)
}

/// Draws `spec.trials` independent topologies and records every spectrum. Trials
/// run in parallel; results are merged in trial order, so output depends only on
/// the seed.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<SpectralEnsemble> {
    let results: Vec<Result<EigenSpectrum>> =
        (0..spec.trials).into_par_iter().map(|t| trial_spectrum(spec, t)).collect();
    let dim = spec.dim();
    let mut ens = SpectralEnsemble {
        spec: *spec,
        trial_ids: Vec::with_capacity(spec.trials),
        all_eigenvalues: Vec::with_capacity(spec.trials * dim),
        min_eigs: Vec::with_capacity(spec.trials),
        kappas: Vec::with_capacity(spec.trials),
        failures: 0,
    };
    for (trial, res) in results.into_iter().enumerate() {
        match res {
            Ok(s) => {
                ens.trial_ids.push(trial);
                ens.min_eigs.push(s.lambda_min);
                ens.kappas.push(s.kappa);
                ens.all_eigenvalues.extend_from_slice(&s.eigenvalues);
            }
            Err(e @ (Error::Numerical { .. } | Error::Invariant(_))) => {
                tracing::warn!(trial, error = %e, "trial skipped");
                ens.failures += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(ens)
}

impl SpectralEnsemble {
    pub fn successful_trials(&self) -> usize {
        self.trial_ids.len()
    }

    /// Spectrum of the `i`-th successful trial.
    pub fn trial_eigenvalues(&self, i: usize) -> &[f64] {
        let dim = self.spec.dim();
        &self.all_eigenvalues[i * dim..(i + 1) * dim]
    }

    pub fn trials(&self) -> impl Iterator<Item = &[f64]> {
        self.all_eigenvalues.chunks_exact(self.spec.dim())
    }
}

/// Empirical cdf `F(x) = #{v ≤ x}/n` on an ascending grid.
pub fn empirical_cdf(values: &[f64], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empirical cdf of an empty sample".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidArgument("cdf grid must be positive and strictly ascending".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(grid.iter().map(|&x| (x, sorted.partition_point(|&v| v <= x) as f64 / n)).collect())
}

/// `10^(j/per_decade)` from `lo` to `hi` inclusive, aligned to whole decades.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || per_decade == 0 {
        return Err(Error::InvalidArgument(format!(
            "invalid log grid [{lo}, {hi}] with {per_decade} points per decade"
        )));
    }
    let step = per_decade as f64;
    let first = (lo.log10() * step).ceil() as i64;
    let last = (hi.log10() * step).floor() as i64;
    Ok((first..=last).map(|j| 10f64.powf(j as f64 / step)).collect())
}

/// Binned counts with either linear bins in `x` or logarithmic bins in `log10 x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `true` when bins are uniform in `log10 x`.
    pub log: bool,
    /// Bin width in the binned variable (`x` or `log10 x`).
    pub width: f64,
    /// Index of the first bin: bin `i` covers `[(first+i)·width, (first+i+1)·width)`.
    pub first: i64,
    pub counts: Vec<u64>,
    /// Normalization: number of values the density integrates against.
    pub total: usize,
}

impl Histogram {
    fn from_binned(log: bool, width: f64, bins: impl Iterator<Item = i64>, total: usize) -> Result<Self> {
        let mut map: BTreeMap<i64, u64> = BTreeMap::new();
        for b in bins {
            *map.entry(b).or_default() += 1;
        }
        let (Some((&first, _)), Some((&last, _))) = (map.first_key_value(), map.last_key_value()) else {
            return Err(Error::InvalidArgument("histogram of an empty sample".into()));
        };
        let mut counts = vec![0; (last - first + 1) as usize];
        for (b, c) in map {
            counts[(b - first) as usize] = c;
        }
        Ok(Self { log, width, first, counts, total })
    }

    /// Linear bins of `width` aligned at multiples of `width`.
    pub fn linear(values: &[f64], width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidArgument("bin width must be positive".into()));
        }
        Self::from_binned(false, width, values.iter().map(|v| (v / width).floor() as i64), values.len())
    }

    /// Bins of `1/per_decade` in `log10 x`; nonpositive values count in the
    /// normalization but fall in no bin.
    pub fn logarithmic(values: &[f64], per_decade: usize) -> Result<Self> {
        if per_decade == 0 {
            return Err(Error::InvalidArgument("need at least one bin per decade".into()));
        }
        let width = 1.0 / per_decade as f64;
        let bins = values.iter().filter(|v| **v > 0.0).map(|v| (v.log10() / width).floor() as i64);
        Self::from_binned(true, width, bins, values.len())
    }

    /// Left edge of bin `i` in the binned variable.
    pub fn edge(&self, i: usize) -> f64 {
        (self.first + i as i64) as f64 * self.width
    }

    /// Bin centers in `x` (geometric centers for log bins).
    pub fn centers(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| {
                let c = self.edge(i) + 0.5 * self.width;
                if self.log {
                    10f64.powf(c)
                } else {
                    c
                }
            })
            .collect()
    }

    /// Density per unit of the binned variable: `count / (total · width)`.
    pub fn densities(&self) -> Vec<f64> {
        let norm = self.total as f64 * self.width;
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }

    /// Density at bin index `b` (absolute index, not offset by `first`).
    fn density_at(&self, b: i64) -> f64 {
        let i = b - self.first;
        if i < 0 || i as usize >= self.counts.len() {
            return 0.0;
        }
        self.counts[i as usize] as f64 / (self.total as f64 * self.width)
    }

    fn count_at(&self, b: i64) -> u64 {
        let i = b - self.first;
        if i < 0 || i as usize >= self.counts.len() {
            0
        } else {
            self.counts[i as usize]
        }
    }

    /// `Σ |p_i - q_i|` over the probability masses of two histograms with the same binning.
    pub fn l1_distance(&self, other: &Histogram) -> Result<f64> {
        if self.log != other.log || (self.width - other.width).abs() > 1e-15 {
            return Err(Error::InvalidArgument("histograms use different binning".into()));
        }
        let lo = self.first.min(other.first);
        let hi = (self.first + self.counts.len() as i64).max(other.first + other.counts.len() as i64);
        Ok((lo..hi).map(|b| (self.density_at(b) - other.density_at(b)).abs() * self.width).sum())
    }
}

/// Power-law fit `F(x) ≈ b·x^a` of a cdf's lower tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub a_hat: f64,
    pub b_hat: f64,
    pub fit_window: [f64; 2],
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through `log10 F` against `log10 x` over the decade below the
/// point where the cdf crosses `anchor`. Points below [`TAIL_FLOOR`] or with `F = 0`
/// are ignored.
pub fn fit_tail(cdf: &[(f64, f64)], anchor: f64) -> Result<TailFit> {
    if !(anchor > 0.0 && anchor < 1.0) {
        return Err(Error::InvalidArgument(format!("anchor must lie in (0, 1), got {anchor}")));
    }
    let pts: Vec<(f64, f64)> =
        cdf.iter().filter(|(x, f)| *x >= TAIL_FLOOR && *f > 0.0).map(|&(x, f)| (x.log10(), f.log10())).collect();
    let target = anchor.log10();
    let cross = pts.iter().position(|&(_, lf)| lf >= target);
    let x_anchor = match cross {
        Some(0) | None => {
            return Err(Error::Fit(format!(
                "the cdf never rises through {anchor:e} above the noise floor; increase trials or widen the grid"
            )))
        }
        Some(i) => {
            let (x0, f0) = pts[i - 1];
            let (x1, f1) = pts[i];
            if f1 > f0 {
                x0 + (target - f0) * (x1 - x0) / (f1 - f0)
            } else {
                x1
            }
        }
    };
    let window: Vec<(f64, f64)> =
        pts.iter().copied().filter(|&(lx, _)| lx >= x_anchor - 1.0 && lx <= x_anchor).collect();
    if window.len() < 4 {
        return Err(Error::Fit(format!(
            "only {} cdf points in the fit window; increase trials or the grid resolution",
            window.len()
        )));
    }
    let n = window.len() as f64;
    let mx = window.iter().map(|p| p.0).sum::<f64>() / n;
    let my = window.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = window.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = window.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = window.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate fit window".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = window.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    if !(slope > 0.0) {
        return Err(Error::Fit(format!("fitted tail slope {slope} is not positive")));
    }
    Ok(TailFit {
        a_hat: slope,
        b_hat: 10f64.powf(intercept),
        fit_window: [10f64.powf(x_anchor - 1.0), 10f64.powf(x_anchor)],
        r_squared,
        points: window.len(),
    })
}

/// One grid point of the minimum-eigenvalue union bound comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinBoundRow {
    pub x: f64,
    pub f_min: f64,
    pub f_all: f64,
    /// `(2M+1)·F(x)`.
    pub bound: f64,
    /// Combined binomial standard error of `F_min - bound`.
    pub sigma: f64,
    pub satisfied: bool,
}

/// Compares the empirical cdf of `λ_min` with `(2M+1)` times the pooled eigenvalue cdf.
/// A point is satisfied when `F_min ≤ bound + 3σ`.
pub fn check_min_eig_bound(ens: &SpectralEnsemble, x_grid: &[f64]) -> Result<Vec<MinBoundRow>> {
    let n = ens.spec.dim() as f64;
    let f_min = empirical_cdf(&ens.min_eigs, x_grid)?;
    let f_all = empirical_cdf(&ens.all_eigenvalues, x_grid)?;
    let t_min = ens.min_eigs.len() as f64;
    let t_all = ens.all_eigenvalues.len() as f64;
    Ok(f_min
        .iter()
        .zip(&f_all)
        .map(|(&(x, fm), &(_, fa))| {
            let bound = n * fa;
            let s_min = (fm * (1.0 - fm) / t_min).sqrt();
            let s_all = n * (fa * (1.0 - fa) / t_all).sqrt();
            let sigma = s_min.hypot(s_all);
            MinBoundRow { x, f_min: fm, f_all: fa, bound, sigma, satisfied: fm <= bound + 3.0 * sigma }
        })
        .collect())
}

/// Mean of `log10(F_min/F)` over grid points below `x_max` where `F_min ≤ 0.1` and at
/// least `min_count` trials fall below `x`: the vertical gap between the two cdfs
/// on log-log axes.
pub fn min_eig_log_offset(ens: &SpectralEnsemble, rows: &[MinBoundRow], x_max: f64, min_count: usize) -> Result<f64> {
    let t = ens.min_eigs.len() as f64;
    let used: Vec<f64> = rows
        .iter()
        .filter(|r| r.x < x_max && r.f_all > 0.0 && r.f_min <= 0.1 && r.f_min * t >= min_count as f64)
        .map(|r| (r.f_min / r.f_all).log10())
        .collect();
    if used.is_empty() {
        return Err(Error::Fit("no grid point has enough small minimum eigenvalues; increase trials".into()));
    }
    Ok(used.iter().sum::<f64>() / used.len() as f64)
}

/// One bin of a log-density comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorRow {
    /// Bin center in `log10 κ`.
    pub y: f64,
    pub log_density: f64,
    pub log_reference: f64,
}

/// Bin-wise comparison of the `log10 κ` density with a reference density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorReport {
    pub d: f64,
    /// Compared range of `log10 κ`.
    pub window: [f64; 2],
    pub bins_compared: usize,
    /// `max |log10 g_κ(y) - log10 g_ref(y)|` over compared bins.
    pub max_discrepancy: f64,
    pub rows: Vec<MirrorRow>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

fn finite_log_kappas(ens: &SpectralEnsemble) -> Vec<f64> {
    let mut y: Vec<f64> = ens.kappas.iter().filter(|k| k.is_finite()).map(|k| k.log10()).collect();
    y.sort_by(f64::total_cmp);
    y
}

fn compare_log_densities(
    d: f64,
    y: &[f64],
    window: [f64; 2],
    reference: &Histogram,
    scale: f64,
    min_count: u64,
) -> Result<MirrorReport> {
    let kappa_hist =
        Histogram::from_binned(true, reference.width, y.iter().map(|v| (v / reference.width).floor() as i64), y.len())?;
    let occupied = |h: &Histogram| h.counts.iter().filter(|&&c| c >= min_count).count();
    let (nk, nr) = (occupied(&kappa_hist), occupied(reference));
    if nk < MIN_LOG_BINS || nr < MIN_LOG_BINS {
        return Err(Error::Fit(format!(
            "{nk} condition-number and {nr} reference log-bins hold {min_count}+ values (need {MIN_LOG_BINS}); increase trials"
        )));
    }
    let w = kappa_hist.width;
    let mut rows = Vec::new();
    for i in 0..kappa_hist.counts.len() {
        let b = kappa_hist.first + i as i64;
        let center = (b as f64 + 0.5) * w;
        if center < window[0] || center > window[1] || kappa_hist.counts[i] < min_count {
            continue;
        }
        // y in [b·w, (b+1)·w) reflects to d - y in (d - (b+1)w, d - b·w]; sample the
        // reference at the reflected center
        let reflected = d - center;
        let rb = (reflected / w).floor() as i64;
        if reference.count_at(rb) < min_count {
            continue;
        }
        let g = kappa_hist.density_at(b);
        let reference_density = scale * interpolated_density(reference, reflected);
        if reference_density <= 0.0 {
            continue;
        }
        rows.push(MirrorRow { y: center, log_density: g.log10(), log_reference: reference_density.log10() });
    }
    if rows.is_empty() {
        return Err(Error::Fit("no log-bin of the window overlaps the reference; increase trials".into()));
    }
    let max_discrepancy = rows.iter().map(|r| (r.log_density - r.log_reference).abs()).fold(0.0, f64::max);
    Ok(MirrorReport { d, window, bins_compared: rows.len(), max_discrepancy, rows })
}

/// Linear interpolation between bin-center densities of a log histogram.
fn interpolated_density(h: &Histogram, z: f64) -> f64 {
    let w = h.width;
    let u = z / w - 0.5;
    let b0 = u.floor() as i64;
    let frac = u - b0 as f64;
    h.density_at(b0) * (1.0 - frac) + h.density_at(b0 + 1) * frac
}

/// Compares the density of `log10 κ` with the density of `d - log10 λ_min` over the
/// central 80% of the `κ` distribution.
pub fn kappa_mirror_check(ens: &SpectralEnsemble, d: f64) -> Result<MirrorReport> {
    let y = finite_log_kappas(ens);
    if y.len() < 2 {
        return Err(Error::Fit("too few finite condition numbers; increase trials".into()));
    }
    let window = [quantile(&y, 0.1), quantile(&y, 0.9)];
    let positive: Vec<f64> = ens.min_eigs.iter().copied().filter(|x| *x > 0.0).collect();
    let mut min_hist = Histogram::logarithmic(&positive, LOG_BINS_PER_DECADE)?;
    min_hist.total = y.len();
    compare_log_densities(d, &y, window, &min_hist, 1.0, 5)
}

/// Compares the density of `log10 κ` with `(2M+1)` times the pooled density of
/// `log10 λ` at `d - log10 κ`, for `κ` above its median.
pub fn kappa_union_check(ens: &SpectralEnsemble, d: f64) -> Result<MirrorReport> {
    let y = finite_log_kappas(ens);
    if y.len() < 2 {
        return Err(Error::Fit("too few finite condition numbers; increase trials".into()));
    }
    let window = [quantile(&y, 0.5), quantile(&y, 0.9)];
    let all = Histogram::logarithmic(&ens.all_eigenvalues, LOG_BINS_PER_DECADE)?;
    // κ densities are per trial, pooled densities per eigenvalue
    let scale = ens.spec.dim() as f64 * ens.min_eigs.len() as f64 / y.len() as f64;
    compare_log_densities(d, &y, window, &all, scale, 5)
}

/// Monte Carlo estimate of `E[λ^p]` with its standard error across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p: usize,
    pub mean: f64,
    pub std_err: f64,
}

/// For `p = 1..=p_max`, averages `(1/(2M+1))·Σ_i λ_i^p` over trials.
pub fn empirical_moments(ens: &SpectralEnsemble, p_max: usize) -> Result<Vec<MomentEstimate>> {
    let t = ens.successful_trials();
    if t == 0 {
        return Err(Error::InvalidArgument("ensemble has no successful trials".into()));
    }
    let dim = ens.spec.dim() as f64;
    let per_trial: Vec<Vec<f64>> = ens
        .trials()
        .map(|lams| {
            let mut sums = vec![0.0; p_max];
            for &l in lams {
                let mut pw = 1.0;
                for s in sums.iter_mut() {
                    pw *= l;
                    *s += pw;
                }
            }
            sums.into_iter().map(|s| s / dim).collect()
        })
        .collect();
    Ok((0..p_max)
        .map(|j| {
            let vals: Vec<f64> = per_trial.iter().map(|v| v[j]).collect();
            let mean = vals.iter().sum::<f64>() / t as f64;
            let var = if t > 1 { vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1) as f64 } else { 0.0 };
            MomentEstimate { p: j + 1, mean, std_err: (var / t as f64).sqrt() }
        })
        .collect())
}
