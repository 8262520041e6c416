//! Exact eigenvalue moments of the random sampling matrix.
//!
//! `E[λ^p]` is a sum over set partitions `τ` of `{1..p}`. Each partition contributes
//! a lattice count `ζ_N(τ)` that is a polynomial in the box size `N = 2M` of degree
//! `p - k + 1`; its leading coefficient `v(τ)` gives the large-size limit
//! `E[λ^p] = Σ_τ v(τ) β^{p-k(τ)}`, while the full polynomial gives the exact moment
//! at finite `(M, r)`.

mod constraints;
mod lattice;
mod partition;
mod poly;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

pub use constraints::{build_constraints, integer_rank, shift_matrix, ConstraintSystem};
pub use lattice::count_lattice_points;
pub use partition::{cyclic_index, enumerate_partitions, Partitions, SetPartition, MAX_ORDER};
pub use poly::{eval_binomial_basis, forward_differences, rational_to_f64, RationalPoly};

use crate::error::{Error, Result};
use lattice::WalkGraph;

/// Partition induced by the repetition pattern of `q`.
pub fn partition_from_index_vector(q: &[i64]) -> Result<SetPartition> {
    SetPartition::from_index_vector(q)
}

type GraphKey = (usize, Vec<(u8, u8)>);

/// Counts of reduced walk graphs at `N = 0..`, shared by partitions with the same edge multiset.
#[derive(Default)]
struct CountCache(HashMap<GraphKey, Vec<u128>>);

/// Forward differences `Δ^j ζ(0)`, `j = 0..=p-k+1`, after checking `Δ^{p-k+2} ζ(0) = 0`.
fn zeta_differences_cached(labels: &[u8], cache: &mut CountCache) -> Result<Vec<i128>> {
    let p = labels.len();
    let graph = WalkGraph::canonical(labels);
    let degree = p - graph.vertices + 1;
    let nodes = degree + 2;
    let reduced = cache
        .0
        .entry(graph.key())
        .or_insert_with(|| (0..nodes as u64).map(|n| graph.count_reduced::<u128>(n)).collect());
    let values: Vec<i128> =
        reduced.iter().enumerate().map(|(n, &c)| (c * (n as u128 + 1).pow(graph.loops)) as i128).collect();
    let diffs = forward_differences(&values);
    if diffs[degree + 1] != 0 {
        let guard = degree + 1;
        let interpolated: i128 = (0..=degree).map(|j| diffs[j] * binomial(guard, j)).sum();
        return Err(Error::InterpolationGuard {
            partition: SetPartition::from_labels_unchecked(labels.to_vec()).to_string(),
            node: guard as u64,
            counted: values[guard].to_string(),
            interpolated: interpolated.to_string(),
        });
    }
    Ok(diffs[..=degree].to_vec())
}

fn binomial(n: usize, k: usize) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i as i128 + 1))
}

/// `ζ_N(τ)` as an exact polynomial in `N`, interpolated at `N = 0..=p-k+1` and
/// checked at the guard node `N = p-k+2`.
pub fn zeta_polynomial(tau: &SetPartition) -> Result<RationalPoly> {
    let diffs = zeta_differences_cached(tau.labels(), &mut CountCache::default())?;
    let big: Vec<BigInt> = diffs.into_iter().map(BigInt::from).collect();
    Ok(RationalPoly::from_forward_differences(&big))
}

/// Leading coefficient `v(τ)` of `ζ_N(τ)`.
pub fn volume_coefficient(tau: &SetPartition) -> Result<BigRational> {
    let diffs = zeta_differences_cached(tau.labels(), &mut CountCache::default())?;
    let d = diffs.len() - 1;
    let factorial: BigInt = (1..=d).map(BigInt::from).product();
    Ok(BigRational::new(BigInt::from(diffs[d]), factorial))
}

/// `Σ_{τ∈T_{p,k}} ζ_N(τ)` for each `k`, held as forward differences in `N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSums {
    p: usize,
    /// `by_blocks[k-1][j] = Δ^j Z_k(0)`.
    by_blocks: Vec<Vec<i128>>,
    /// Number of partitions with `k` blocks.
    counts: Vec<u64>,
}

impl PartitionSums {
    fn empty(p: usize) -> Self {
        Self { p, by_blocks: (1..=p).map(|k| vec![0; p - k + 2]).collect(), counts: vec![0; p] }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.by_blocks.iter_mut().zip(other.by_blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of partitions of `{1..p}` with `k` blocks seen during enumeration.
    pub fn partitions_with_blocks(&self, k: usize) -> u64 {
        self.counts[k - 1]
    }

    /// `Σ_{τ∈T_{p,k}} ζ_n(τ)`.
    pub fn zeta_sum(&self, k: usize, n: u64) -> BigInt {
        let diffs: Vec<BigInt> = self.by_blocks[k - 1].iter().map(|&d| BigInt::from(d)).collect();
        eval_binomial_basis(&diffs, n)
    }

    /// `Σ_{τ∈T_{p,k}} v(τ)`.
    pub fn volume_sum(&self, k: usize) -> BigRational {
        let diffs = &self.by_blocks[k - 1];
        let d = diffs.len() - 1;
        let factorial: BigInt = (1..=d).map(BigInt::from).product();
        BigRational::new(BigInt::from(diffs[d]), factorial)
    }
}

struct Accumulator {
    sums: PartitionSums,
    cache: CountCache,
}

fn compute_sums(p: usize) -> Result<PartitionSums> {
    let mut parts = enumerate_partitions(p)?;
    let stream = std::iter::from_fn(move || parts.next_labels().map(<[u8]>::to_vec));
    let acc = stream
        .par_bridge()
        .try_fold(
            || Accumulator { sums: PartitionSums::empty(p), cache: CountCache::default() },
            |mut acc, labels| -> Result<Accumulator> {
                let diffs = zeta_differences_cached(&labels, &mut acc.cache)?;
                let k = p + 1 - (diffs.len() - 1);
                for (x, d) in acc.sums.by_blocks[k - 1].iter_mut().zip(diffs) {
                    *x += d;
                }
                acc.sums.counts[k - 1] += 1;
                Ok(acc)
            },
        )
        .map(|acc| acc.map(|a| a.sums))
        .try_reduce(|| PartitionSums::empty(p), |a, b| Ok(a.merge(b)))?;
    Ok(acc)
}

/// Per-order partition sums, computed once per process.
pub fn partition_sums(p: usize) -> Result<Arc<PartitionSums>> {
    if p == 0 || p > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("moment order must be in 1..={MAX_ORDER}, got {p}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<PartitionSums>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.lock().expect("moment cache poisoned").get(&p) {
        return Ok(Arc::clone(hit));
    }
    let sums = Arc::new(compute_sums(p)?);
    cache.lock().expect("moment cache poisoned").insert(p, Arc::clone(&sums));
    Ok(sums)
}

/// `E[λ^p] = Σ_k c_k β^{p-k}` with exact rational `c_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPolynomial {
    p: usize,
    /// `coeffs[k-1] = c_k`.
    coeffs: Vec<BigRational>,
}

impl MomentPolynomial {
    pub fn p(&self) -> usize {
        self.p
    }

    /// `c_k`, the coefficient of `β^{p-k}`.
    pub fn coefficient(&self, k: usize) -> &BigRational {
        &self.coeffs[k - 1]
    }

    /// `c_1..c_p`.
    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficients by ascending power of `β`.
    pub fn beta_coefficients(&self) -> Vec<BigRational> {
        self.coeffs.iter().rev().cloned().collect()
    }

    pub fn evaluate_exact(&self, beta: &BigRational) -> BigRational {
        self.coeffs.iter().fold(BigRational::zero(), |acc, c| acc * beta + c)
    }

    pub fn evaluate(&self, beta: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc * beta + rational_to_f64(c))
    }
}

impl fmt::Display for MomentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (power, c) in self.beta_coefficients().iter().enumerate() {
            if power > 0 {
                write!(f, " + ")?;
            }
            if power == 0 || !c.is_one() {
                if c.is_integer() {
                    write!(f, "{}", c.numer())?;
                } else {
                    write!(f, "({}/{})", c.numer(), c.denom())?;
                }
            }
            match power {
                0 => {}
                1 => write!(f, "β")?,
                _ => write!(f, "β^{power}")?,
            }
        }
        Ok(())
    }
}

pub fn moment_polynomial(p: usize) -> Result<MomentPolynomial> {
    let sums = partition_sums(p)?;
    let coeffs: Vec<BigRational> = (1..=p).map(|k| sums.volume_sum(k)).collect();
    if let Some(bad) = coeffs.iter().position(|c| !c.is_positive()) {
        return Err(Error::Invariant(format!("nonpositive moment coefficient c_{} for p = {p}", bad + 1)));
    }
    Ok(MomentPolynomial { p, coeffs })
}

/// `r!/(r-k)!`, zero when `k > r`.
pub fn falling_factorial(r: u64, k: usize) -> BigInt {
    if k as u64 > r {
        return BigInt::zero();
    }
    (0..k as u64).map(|i| BigInt::from(r - i)).product()
}

/// Exact `(1/((2M+1) r^p)) Σ_τ r!/(r-k)! ζ_{2M}(τ)`.
pub fn finite_moment_exact(p: usize, m: usize, r: usize) -> Result<BigRational> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be positive".into()));
    }
    let sums = partition_sums(p)?;
    let n = 2 * m as u64;
    let total: BigInt = (1..=p).map(|k| falling_factorial(r as u64, k) * sums.zeta_sum(k, n)).sum();
    let denom = BigInt::from(2 * m + 1) * BigInt::from(r).pow(p as u32);
    Ok(BigRational::new(total, denom))
}

pub fn finite_moment(p: usize, m: usize, r: usize) -> Result<f64> {
    finite_moment_exact(p, m, r).map(|x| rational_to_f64(&x))
}

/// Truncated moment generating function `Σ_{p=0}^{p_max} E[λ^p] s^p / p!`.
///
/// Only a truncation is available, so this is not the full series.
pub fn mgf_partial(beta: f64, s: f64, p_max: usize) -> Result<f64> {
    if p_max > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("p_max must be at most {MAX_ORDER}")));
    }
    let mut total = 1.0;
    let mut term = 1.0;
    for p in 1..=p_max {
        term *= s / p as f64;
        total += moment_polynomial(p)?.evaluate(beta) * term;
    }
    Ok(total)
}
