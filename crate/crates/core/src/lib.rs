//! Monte Carlo laboratory for the largest eigenvalue of a product of two
//! independent β-Laguerre matrices.
//!
//! The pipeline is:
//!
//! 1. [`variates`] draws χ variates from reproducible, splittable streams.
//! 2. [`ensemble`] assembles the bidiagonal factor `B` and the tridiagonal
//!    Laguerre matrix `X = BᵀB/β`.
//! 3. [`product`] symmetrizes `X_p·X_q` into a pentadiagonal similarity
//!    `S = B_q·X_p·B_qᵀ/β` with the same spectrum.
//! 4. [`eig`] extracts extreme eigenvalues (Sturm bisection for tridiagonal,
//!    Lanczos for pentadiagonal).
//! 5. [`scaling`] centers and scales the top eigenvalue; [`airy`] produces
//!    Tracy-Widom reference samples from the stochastic Airy operator.
//! 6. [`stats`] compares the two samples, and [`harness`] drives the whole
//!    thing from the command line.

pub mod airy;
pub mod eig;
pub mod ensemble;
mod error;
pub mod harness;
pub mod product;
pub mod scaling;
pub mod stats;
pub mod variates;

pub use error::{Error, Result};
