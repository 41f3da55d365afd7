//! Linear-algebra kernels shared by the cross-section, adiabatic and reference solvers.

pub mod banded;
pub mod eigen;
pub mod sparse;
pub mod tridiag;

pub use banded::{BandedCholesky, BandedSym};
pub use eigen::{
    generalized_lowest, inverse_power, inverse_power_from, lowest_eigenpairs, GroundState, InversePowerOptions,
    SubspaceOptions, SubspaceResult,
};
pub use sparse::{pcg, CgStats, Csr, SymOperator};
pub use tridiag::{EigenPair, SymTridiagonal};
