//! Piecewise-linear finite elements on simplicial meshes.

pub mod assembly;
pub mod quadrature;

pub use assembly::{Assembler, NonlinearTerms, Source, VectorField};
