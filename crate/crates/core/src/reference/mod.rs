//! Direct discretizations of the full Dirichlet operator on thin domains,
//! used to validate the effective operators.
//!
//! All solvers work in the scaled normal variable `n = y/ε`, so the operator
//! is `−ε²Δ_x − Δ_n` on `{|n| ≤ f(x)}` and its spectrum is `O(1)`.

mod hollow;
mod mapped;
mod twisted;

pub use hollow::solve_hollow_surface;
pub use mapped::{solve_axisym_tube, solve_strip, BaseInterval};
pub use twisted::{solve_twisted_tube, TwistedOperator, TwistedOptions};

use std::fmt;

use crate::error::{Result, WaveguideError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullKind {
    Strip,
    AxisymTube { m: u32 },
    TwistedTube,
    HollowSurface { m: u32 },
}

impl FullKind {
    pub fn angular_index(&self) -> u32 {
        match *self {
            FullKind::AxisymTube { m } | FullKind::HollowSurface { m } => m,
            _ => 0,
        }
    }
}

impl fmt::Display for FullKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FullKind::Strip => "strip",
            FullKind::AxisymTube { .. } => "axisym_tube",
            FullKind::TwistedTube => "twisted_tube",
            FullKind::HollowSurface { .. } => "hollow_surface",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullSpectrum {
    pub kind: FullKind,
    pub eps: f64,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub nx: usize,
    /// Normal grid size (cells across the fibre).
    pub nn: usize,
}

/// Residual bound for reported eigenpairs, relative to the operator norm.
pub const RESIDUAL_TOL: f64 = 1e-7;

impl FullSpectrum {
    pub(crate) fn checked(self) -> Result<Self> {
        if self.eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(WaveguideError::InvalidInput("eigenvalues not sorted".into()));
        }
        if let Some(r) = self.residuals.iter().copied().find(|r| !(*r <= RESIDUAL_TOL)) {
            return Err(WaveguideError::NoConvergence {
                method: format!("{} eigensolver", self.kind),
                iterations: 0,
                residual: r,
            });
        }
        Ok(self)
    }

    pub fn ground(&self) -> f64 {
        self.eigenvalues[0]
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(WaveguideError::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}
