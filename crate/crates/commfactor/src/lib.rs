//! Numerical engine for the de la Harpe–Skandalis determinant on matrices and
//! matrix paths, and for explicit factorization of determinant-trivial
//! unitaries/invertibles into bounded products of multiplicative commutators.
//!
//! The crate is organized around the objects it computes with:
//!
//! * [`matcore`] — dense complex matrix numerics (eigendecomposition of normal
//!   matrices, logarithms, polar decomposition, projections),
//! * [`pathfun`] — sampled matrix functions on `[0,1]` (the concrete model of
//!   `M_m(C[0,1])`) with continuous eigenvalue tracking,
//! * [`dhsdet`] — the determinant itself: path integral, closed forms, lattice
//!   reduction and the "is it zero" decision,
//! * [`su2fact`] — the 2×2 commutator kernels (norm-controlled SU(2) diagonal,
//!   swap trick, invertible `diag(λ, 1/λ)`),
//! * [`diagfact`] — diagonal matrix paths as products of 4 or 16 commutators
//!   via interval covers and partitions of unity,
//! * [`blocklu`] — Schur-complement `s·d·t` block factorization, quantitative
//!   projection selection, unitriangular-as-commutator elimination,
//! * [`pipeline`] — the end-to-end factorizations with certificates.
//!
//! Every factorization carries a certificate (reconstruction error, factor
//! norms, count) that can be re-verified independently of the construction.

pub mod blocklu;
pub mod dhsdet;
pub mod diagfact;
pub mod error;
pub mod factorization;
pub mod json;
pub mod matcore;
pub(crate) mod par;
pub mod pathfun;
pub mod pipeline;
pub mod sample;
pub mod su2fact;
pub mod tol;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
