//! Reconstruction of bandlimited 1-D fields from irregular samples, Monte Carlo
//! characterization of the random Toeplitz matrices that arise, and exact
//! moments of their asymptotic eigenvalue distribution.
//!
//! The crate is organized bottom-up:
//!
//! - [`field`]: bandlimited signals, sample sets, sampling topologies and gap profiles.
//! - [`linsys`]: the Toeplitz normal equations, Hermitian eigendecomposition and solves.
//! - [`reconstruct`]: the end-to-end pipeline and success-probability sweeps.
//! - [`spectral`]: Monte Carlo ensembles of the sampling matrix and their statistics.
//! - [`moments`]: exact eigenvalue moments via set-partition enumeration and lattice-point counts.
//! - [`validation`]: simulation vs. finite-size vs. asymptotic moment comparison.
//! - [`io`]: CSV/JSON file schemas shared by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod field;
pub mod io;
pub mod linsys;
pub mod moments;
pub mod reconstruct;
pub mod seed;
pub mod spectral;
pub mod validation;

pub use error::{Error, Result};
pub use field::{BandlimitedSignal, GapProfile, SampleSet, Support};
pub use linsys::{EigenSpectrum, Solution, SolveDiagnostics, ToeplitzSystem};
pub use moments::{MomentPolynomial, SetPartition};
pub use num_complex::Complex64;
pub use reconstruct::{ReconstructOptions, ReconstructionReport};
pub use spectral::{EnsembleSpec, SpectralEnsemble, TailFit};
