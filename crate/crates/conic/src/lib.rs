//! Backend-agnostic builder for small linear and semidefinite programs.
//!
//! Problems are assembled from real scalar variables, Hermitian matrix
//! variables and affine constraints, then handed to the Clarabel
//! interior-point solver. Hermitian PSD constraints with complex data are
//! posed through the real embedding `H ↦ [[Re H, −Im H], [Im H, Re H]]`;
//! constraints with purely real data skip the embedding.

// Links the system OpenBLAS that the backend's dense kernels call into.
use openblas_src as _;

mod expr;
mod problem;
mod solve;

pub use expr::{CMat, HermExpr, HermVar, LinExpr, VarId};
pub use problem::{ConicProblem, EqId, HermEqId, IneqId, PsdId, Sense, VarKind};
pub use solve::{solve, SolverReport, SolverSettings, Status};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("backend rejected the problem: {0}")]
    Backend(String),
}
