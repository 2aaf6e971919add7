//! Estimation of low-rank matrices with sparse factors via sparsity-budgeted
//! nuclear-type norms.
//!
//! The crate provides:
//!
//! - dense kernels and proximal primitives ([`linalg`]),
//! - the k-support norm and flat-atom gauge with exhaustive oracles
//!   ([`vector_norms`]),
//! - atoms, decompositions, ground-truth generators and fixture matrices
//!   ([`atoms`]),
//! - the matrix norm family: exact/heuristic duals, a certified primal
//!   oracle, and subdifferential tests ([`matrix_norms`]),
//! - bi-truncated power iterations ([`tpi`]),
//! - the working-set solver for norm-penalized problems ([`solver`]),
//! - sparse-PCA and denoising estimators with slow-rate bounds
//!   ([`estimators`]),
//! - empirical statistical-dimension experiments and bound formulas
//!   ([`statdim`]).

pub mod atoms;
mod combinatorics;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod matrix_norms;
pub mod rng;
mod simplex;
pub mod solver;
pub mod statdim;
pub mod tpi;
pub mod vector_norms;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SvdResult, Tolerances, DEFAULT_TOLERANCES};
