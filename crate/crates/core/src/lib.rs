//! Effective one-dimensional Schrödinger operators for thin quantum waveguides
//! and direct solvers for the full Dirichlet problems they approximate.
//!
//! Pipeline: [`geometry`] (frames, metrics, curvature potentials) →
//! [`cross_section`] (fibre ground state) → [`adiabatic`] (effective operator)
//! and [`reference`] (full operator) → [`compare`] (ε-sweeps and orders).
//!
//! Numeric kernels are generic over [`Real`]; the PDE assemblers work in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adiabatic;
pub mod compare;
pub mod cross_section;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod polar;
pub mod profile;
pub mod reference;
pub mod scalar;
pub mod special;

pub use error::{Result, WaveguideError};
pub use scalar::Real;

pub type SymTridiagonalF64 = linalg::SymTridiagonal<f64>;
pub type SymTridiagonalF32 = linalg::SymTridiagonal<f32>;
pub type BandedSymF64 = linalg::BandedSym<f64>;
pub type BandedSymF32 = linalg::BandedSym<f32>;
pub type CsrF64 = linalg::Csr<f64>;
pub type CsrF32 = linalg::Csr<f32>;
pub type PrincipalCurvatureSetF64 = geometry::PrincipalCurvatureSet<f64>;
pub type PrincipalCurvatureSetF32 = geometry::PrincipalCurvatureSet<f32>;
