//! Toeplitz normal equations of irregular sampling.
//!
//! For sample positions `t_q` with weights `ω_q` the system matrix is the
//! `(2M+1)×(2M+1)` Hermitian Toeplitz matrix `(T)_{k,m} = r_{k-m}` with generators
//!
//! ```text
//! r_ℓ = Σ_q ω_q e^{2πiℓ t_q},   ℓ = -2M..2M
//! ```
//!
//! Unweighted systems use `ω_q = 1/r`; preconditioned systems use the circular gap
//! weights `w_q` of [`crate::field::gap_profile`]. Both weight sets sum to one, so
//! `r_0 = 1` and `trace(T) = 2M + 1` in either case.
//!
//! The right-hand side is `b_k = Σ_q ω_q e^{2πik t_q} p(t_q)`. With this pairing,
//! `T x = b` is solved by `x_k = a_{-k}`: the solution vector lists the Fourier
//! coefficients in reversed harmonic order, and [`solve`] undoes the reversal.

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{gap_profile, unit_phasor, SampleSet};

/// Default condition-number ceiling above which a system is flagged ill-conditioned.
/// Double precision carries about 16 digits; this leaves four.
pub const DEFAULT_KAPPA_MAX: f64 = 1e12;

/// Eigenvalues in `[-CLAMP_REL·λ_max, 0)` are roundoff and clamped to zero.
pub const CLAMP_REL: f64 = 1e-10;

const MAX_REFINEMENT_STEPS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
struct Nodes {
    positions: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Complex64>,
}

/// Hermitian Toeplitz system `T x = b` described by its `4M+1` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSystem {
    harmonics: usize,
    samples: usize,
    weighted: bool,
    /// `generators[ℓ + 2M] = r_ℓ`.
    generators: Vec<Complex64>,
    rhs: Vec<Complex64>,
    /// The sampling data the system was assembled from, used to refine solutions
    /// against the sample-domain residual. Absent for systems loaded from a dump.
    nodes: Option<Nodes>,
}

/// `r_ℓ = Σ_q ω_q e^{2πiℓ t_q}` for `ℓ = -max_lag..=max_lag`.
pub fn sampling_generators(positions: &[f64], weights: &[f64], max_lag: usize) -> Vec<Complex64> {
    debug_assert_eq!(positions.len(), weights.len());
    let mut gens = vec![Complex64::new(0.0, 0.0); 2 * max_lag + 1];
    for lag in 0..=max_lag {
        let r: Complex64 = positions.iter().zip(weights).map(|(&t, &w)| unit_phasor(lag as f64 * t) * w).sum();
        gens[max_lag + lag] = r;
        gens[max_lag - lag] = r.conj();
    }
    gens[max_lag].im = 0.0;
    gens
}

/// Unweighted generators `r_ℓ = (1/r) Σ_q e^{2πiℓ t_q}` for a bandwidth of `M` harmonics.
pub fn toeplitz_generators(positions: &[f64], harmonics: usize) -> Vec<Complex64> {
    let w = vec![1.0 / positions.len() as f64; positions.len()];
    sampling_generators(positions, &w, 2 * harmonics)
}

/// Dense `(2M+1)×(2M+1)` matrix with entries `r_{k-m}`.
pub fn dense_from_generators(harmonics: usize, generators: &[Complex64]) -> Mat<Complex64> {
    let n = 2 * harmonics + 1;
    let offset = 2 * harmonics as isize;
    Mat::from_fn(n, n, |k, m| generators[(k as isize - m as isize + offset) as usize])
}

/// Assembles `T` and `b` from samples. With `weighted = true` the circular gap
/// weights are used (requires at least two samples).
pub fn build_system(samples: &SampleSet, harmonics: usize, weighted: bool) -> Result<ToeplitzSystem> {
    let r = samples.len();
    if r == 0 {
        return Err(Error::InvalidArgument("sample set must not be empty".into()));
    }
    let positions = samples.positions();
    let weights = if weighted { gap_profile(positions)?.weights } else { vec![1.0 / r as f64; r] };
    let generators = sampling_generators(positions, &weights, 2 * harmonics);
    let nodes = Nodes { positions: positions.to_vec(), weights, values: samples.values().to_vec() };
    let rhs = weighted_projection(&nodes, &nodes.values, harmonics);
    Ok(ToeplitzSystem { harmonics, samples: r, weighted, generators, rhs, nodes: Some(nodes) })
}

/// `Σ_q ω_q e^{2πik t_q} v_q` for `k = -M..=M`.
fn weighted_projection(nodes: &Nodes, v: &[Complex64], harmonics: usize) -> Vec<Complex64> {
    let m = harmonics as i64;
    (-m..=m)
        .map(|k| {
            nodes
                .positions
                .iter()
                .zip(&nodes.weights)
                .zip(v)
                .map(|((&t, &w), &val)| unit_phasor(k as f64 * t) * val * w)
                .sum()
        })
        .collect()
}

impl ToeplitzSystem {
    /// Rebuilds a system from generators and right-hand side, checking lengths and
    /// Hermitian symmetry `r_{-ℓ} = conj(r_ℓ)`.
    pub fn from_parts(
        harmonics: usize,
        samples: usize,
        weighted: bool,
        generators: Vec<Complex64>,
        rhs: Vec<Complex64>,
    ) -> Result<Self> {
        if generators.len() != 4 * harmonics + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected {} generators for M = {harmonics}, got {}",
                4 * harmonics + 1,
                generators.len()
            )));
        }
        if rhs.len() != 2 * harmonics + 1 {
            return Err(Error::InvalidArgument(format!(
                "expected right-hand side of length {}, got {}",
                2 * harmonics + 1,
                rhs.len()
            )));
        }
        if samples == 0 {
            return Err(Error::InvalidArgument("system needs r >= 1".into()));
        }
        let c = 2 * harmonics;
        let scale = generators.iter().map(|g| g.norm()).fold(0.0, f64::max).max(1.0);
        for lag in 0..=c {
            if (generators[c - lag] - generators[c + lag].conj()).norm() > 1e-12 * scale {
                return Err(Error::InvalidArgument(format!("generators violate r_-{lag} = conj(r_{lag})")));
            }
        }
        Ok(Self { harmonics, samples, weighted, generators, rhs, nodes: None })
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    /// Matrix dimension `2M + 1`.
    pub fn dim(&self) -> usize {
        2 * self.harmonics + 1
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    /// All generators, `r_{-2M}, ..., r_{2M}`.
    pub fn generators(&self) -> &[Complex64] {
        &self.generators
    }

    /// `r_ℓ` for `|ℓ| <= 2M`.
    pub fn generator(&self, lag: i64) -> Complex64 {
        let c = 2 * self.harmonics as i64;
        assert!(lag.abs() <= c, "lag {lag} outside ±{c}");
        self.generators[(lag + c) as usize]
    }

    pub fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    /// Materializes `T`. Only call when the dense matrix is actually needed.
    pub fn to_dense(&self) -> Mat<Complex64> {
        dense_from_generators(self.harmonics, &self.generators)
    }

    pub fn to_dump(&self) -> SystemDump {
        SystemDump {
            harmonics: self.harmonics,
            samples: self.samples,
            weighted: self.weighted,
            generators: self.generators.iter().map(|z| [z.re, z.im]).collect(),
            rhs: self.rhs.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_dump(dump: &SystemDump) -> Result<Self> {
        let cplx = |v: &[[f64; 2]]| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Self::from_parts(dump.harmonics, dump.samples, dump.weighted, cplx(&dump.generators), cplx(&dump.rhs))
    }
}

/// JSON form of a [`ToeplitzSystem`]: `{M, r, weighted, generators, rhs}` with
/// complex numbers as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDump {
    #[serde(rename = "M")]
    pub harmonics: usize,
    #[serde(rename = "r")]
    pub samples: usize,
    pub weighted: bool,
    pub generators: Vec<[f64; 2]>,
    pub rhs: Vec<[f64; 2]>,
}

/// Sorted spectrum of a Hermitian positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    pub eigenvalues: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `λ_max / λ_min`, or `+∞` when `λ_min = 0`.
    pub kappa: f64,
}

impl EigenSpectrum {
    /// Sorts, clamps roundoff negatives to zero and derives `λ_min`, `λ_max`, `κ`.
    ///
    /// Eigenvalues below `-CLAMP_REL·λ_max` mean the matrix is not PSD and are rejected.
    pub fn from_raw(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical {
                size: eigenvalues.len(),
                sweeps: None,
                detail: "non-finite eigenvalue".into(),
            });
        }
        eigenvalues.sort_by(f64::total_cmp);
        let lambda_max = *eigenvalues.last().unwrap();
        let floor = -CLAMP_REL * lambda_max.abs();
        for x in eigenvalues.iter_mut() {
            if *x < 0.0 {
                if *x < floor {
                    return Err(Error::Invariant(format!(
                        "eigenvalue {x:e} is below -{CLAMP_REL:e}·λ_max; matrix is not positive semidefinite"
                    )));
                }
                *x = 0.0;
            }
        }
        let lambda_min = eigenvalues[0];
        let kappa = if lambda_min > 0.0 { lambda_max / lambda_min } else { f64::INFINITY };
        Ok(Self { eigenvalues, lambda_min, lambda_max, kappa })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn no_convergence(size: usize) -> Error {
    Error::Numerical {
        size,
        sweeps: None,
        detail: "QR iteration on the tridiagonal form reached its iteration limit".into(),
    }
}

/// Unclamped ascending eigenvalues of a dense Hermitian matrix.
pub fn hermitian_eigenvalues(matrix: &Mat<Complex64>) -> Result<Vec<f64>> {
    let n = matrix.nrows();
    matrix.self_adjoint_eigenvalues(Side::Lower).map_err(|_| no_convergence(n))
}

/// Unclamped ascending eigenvalues of `T`.
pub fn raw_eigenvalues(system: &ToeplitzSystem) -> Result<Vec<f64>> {
    hermitian_eigenvalues(&system.to_dense())
}

/// Spectrum of `T` with the clamp policy applied.
pub fn eig_hermitian(system: &ToeplitzSystem) -> Result<EigenSpectrum> {
    EigenSpectrum::from_raw(raw_eigenvalues(system)?)
}

/// Eigenpairs of `T`; column `i` of `vectors` belongs to `spectrum.eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub spectrum: EigenSpectrum,
    pub vectors: Mat<Complex64>,
    /// Unclamped eigenvalues, aligned with the columns of `vectors`.
    pub raw: Vec<f64>,
}

pub fn eig_hermitian_with_vectors(system: &ToeplitzSystem) -> Result<HermitianEigen> {
    let dense = system.to_dense();
    let n = dense.nrows();
    let evd = dense.self_adjoint_eigen(Side::Lower).map_err(|_| no_convergence(n))?;
    let s = evd.S().column_vector();
    let raw: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let spectrum = EigenSpectrum::from_raw(raw.clone())?;
    Ok(HermitianEigen { spectrum, vectors: evd.U().to_owned(), raw })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub kappa: f64,
    pub min_eig: f64,
    pub max_eig: f64,
    pub ill_conditioned: bool,
    /// Number of sample-domain refinement steps applied.
    pub refinement_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Estimated `â_k` for `k = -M..=M`.
    pub coeffs: Vec<Complex64>,
    pub diagnostics: SolveDiagnostics,
}

/// Applies the spectral (pseudo-)inverse: `Σ_{λ_i > cutoff} u_i (u_i† v) / λ_i`.
fn apply_inverse(eig: &HermitianEigen, cutoff: f64, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    let u = &eig.vectors;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, &lambda) in eig.spectrum.eigenvalues.iter().enumerate() {
        if lambda <= cutoff || lambda <= 0.0 {
            continue;
        }
        let proj: Complex64 = (0..n).map(|j| u[(j, i)].conj() * v[j]).sum::<Complex64>() / lambda;
        for (j, o) in out.iter_mut().enumerate() {
            *o += u[(j, i)] * proj;
        }
    }
    out
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `T x = b` through the eigendecomposition of `T` and returns the
/// coefficients `â_k` with conditioning diagnostics.
///
/// Systems with `κ > kappa_max` are flagged and solved with a spectral
/// pseudo-inverse that drops eigenvalues below `λ_max / kappa_max`. When the system
/// still carries its sampling data, the estimate is refined against the residual
/// `p(t_q) - p̂(t_q)` evaluated on the samples; this recovers the accuracy that
/// forming `T = F F†` explicitly gives away.
pub fn solve(system: &ToeplitzSystem, kappa_max: f64) -> Result<Solution> {
    if !(kappa_max > 1.0) {
        return Err(Error::InvalidArgument(format!("kappa_max must exceed 1, got {kappa_max}")));
    }
    let eig = eig_hermitian_with_vectors(system)?;
    let spec = &eig.spectrum;
    let ill_conditioned = !(spec.kappa <= kappa_max);
    let cutoff = if ill_conditioned { spec.lambda_max / kappa_max } else { 0.0 };

    let mut x = apply_inverse(&eig, cutoff, &system.rhs);
    x.reverse();
    let mut coeffs = x;

    let mut steps = 0;
    if let Some(nodes) = &system.nodes {
        let m = system.harmonics as i64;
        let mut last_correction = f64::INFINITY;
        for _ in 0..MAX_REFINEMENT_STEPS {
            let residual: Vec<Complex64> = nodes
                .positions
                .iter()
                .zip(&nodes.values)
                .map(|(&t, &p)| {
                    let fit: Complex64 = coeffs.iter().zip(-m..=m).map(|(&a, k)| a * unit_phasor(k as f64 * t)).sum();
                    p - fit
                })
                .collect();
            let rb = weighted_projection(nodes, &residual, system.harmonics);
            let mut delta = apply_inverse(&eig, cutoff, &rb);
            delta.reverse();
            let size = norm(&delta);
            if !(size < last_correction) {
                break;
            }
            for (a, d) in coeffs.iter_mut().zip(&delta) {
                *a += d;
            }
            steps += 1;
            last_correction = size;
            if size <= 4.0 * f64::EPSILON * norm(&coeffs) {
                break;
            }
        }
    }

    Ok(Solution {
        coeffs,
        diagnostics: SolveDiagnostics {
            kappa: spec.kappa,
            min_eig: spec.lambda_min,
            max_eig: spec.lambda_max,
            ill_conditioned,
            refinement_steps: steps,
        },
    })
}

/// Upper bound `((1 + 2δM)/(1 - 2δM))²` on `κ(T_w)`, valid when `δ < 1/(2M)`;
/// `+∞` when the hypothesis fails.
pub fn precond_bound(delta: f64, harmonics: usize) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("gap must be positive, got {delta}")));
    }
    if harmonics == 0 {
        return Err(Error::InvalidArgument("bound requires M >= 1".into()));
    }
    let x = 2.0 * delta * harmonics as f64;
    if x >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(((1.0 + x) / (1.0 - x)).powi(2))
}
