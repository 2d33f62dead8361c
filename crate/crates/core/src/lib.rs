//! Numerical laboratory for partial Dirichlet-to-Neumann maps of quasilinear
//! and semilinear elliptic equations: forward solvers, linearized boundary
//! operators, singular solutions and coefficient-recovery pipelines.

pub mod dn;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod pde;
pub mod recon;
pub mod singular;
pub mod table;

pub use error::{Error, Result};
