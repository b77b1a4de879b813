//! Nonbacktracking operators and spectral-radius machinery for sparse random matrices.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! - [`model`]: sparse Hermitian/general matrices, probability profiles, norms and
//!   ensemble parameters (`d`, `kappa`, `q`).
//! - [`ensembles`]: seeded samplers for (in)homogeneous Erdős–Rényi graphs, block
//!   models and Rademacher matrices on a fixed support.
//! - [`nbop`]: the nonbacktracking operator `B` on directed edges with a matrix-free
//!   matvec.
//! - [`spectra`]: dense eigensolvers, Lanczos and Arnoldi iterations, spectral radius
//!   estimates and trace moments.
//! - [`iharabass`]: the λ-parametrised determinant identity, eigenvector recovery and
//!   the deterministic norm bounds.
//! - [`checks`]: random instances and verification sweeps used by the test suites.
//! - [`walks`]: walk enumeration, walk graphs, normal forms, degree-two contraction and
//!   exact trace-moment oracles on finite-support ensembles.
//!
//! Matrix indices are 0-based. Walk vertex labels are 1-based, matching the usual
//! convention for normal paths.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod checks;
pub mod dense;
pub mod ensembles;
mod error;
pub mod iharabass;
pub mod model;
pub mod nbop;
mod scalar;
pub mod spectra;
pub mod walks;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use scalar::Scalar;
