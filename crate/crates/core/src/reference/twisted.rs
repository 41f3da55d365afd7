//! Straight tube whose elliptical fibres rotate by `ω(x)`: the operator
//! `−ε²(∂_x + ω'L)² − Δ_n` on `[x0, x1] × F`, with `L = n¹∂₂ − n²∂₁`.
//!
//! The fibre uses the polar grid of the cross-section solver; the base uses
//! `nx` cells. Each base cell contributes `ε² h ‖D_e u + ω'_e L ū_e‖²_M`, where
//! `D_e` is the forward difference and `ū_e` the cell average, so the operator
//! is symmetric positive semidefinite by construction. It is applied matrix-free.

use rayon::prelude::*;

use super::{check_eps, BaseInterval, FullKind, FullSpectrum};
use crate::cross_section::CrossSectionShape;
use crate::error::{Result, WaveguideError};
use crate::geometry::TwistProfile;
use crate::linalg::{inverse_power, inverse_power_from, Csr, InversePowerOptions, SymOperator};
use crate::polar::PolarGrid;

#[derive(Debug, Clone, Copy)]
pub struct TwistedOptions {
    pub nx: usize,
    /// Fibre grid parameter, as for the cross-section solver.
    pub n_fibre: usize,
    /// Upper bound on the number of unknowns.
    pub cap: usize,
    pub tol: f64,
}

impl Default for TwistedOptions {
    fn default() -> Self {
        Self {
            nx: 64,
            n_fibre: 48,
            cap: 2_000_000,
            tol: 1e-11,
        }
    }
}

pub struct TwistedOperator {
    pub grid: PolarGrid,
    kn: Csr<f64>,
    l: Csr<f64>,
    lt: Csr<f64>,
    fibre_mass: Vec<f64>,
    /// `Σ_{r'} M_{r'} L_{r'r}²` per fibre node.
    l_col_sq: Vec<f64>,
    /// `ω'` at cell midpoints.
    rate: Vec<f64>,
    nx: usize,
    h: f64,
    eps: f64,
}

impl TwistedOperator {
    pub fn new(grid: PolarGrid, rate: Vec<f64>, h: f64, eps: f64) -> Result<Self> {
        let nf = grid.len();
        let kn = Csr::from_triplets(nf, grid.stiffness_entries(1.0, 0))?;
        let entries = grid.l_entries();
        let fibre_mass = grid.mass();
        let mut l_col_sq = vec![0.0; nf];
        for &(r, c, v) in &entries {
            l_col_sq[c] += fibre_mass[r] * v * v;
        }
        let lt = Csr::from_triplets(nf, entries.iter().map(|&(r, c, v)| (c, r, v)).collect())?;
        let l = Csr::from_triplets(nf, entries)?;
        Ok(Self {
            grid,
            kn,
            l,
            lt,
            fibre_mass,
            l_col_sq,
            nx: rate.len(),
            rate,
            h,
            eps,
        })
    }

    fn slices(&self) -> usize {
        self.nx - 1
    }

    pub fn mass(&self) -> Vec<f64> {
        let h = self.h;
        (0..self.slices())
            .flat_map(|_| self.fibre_mass.iter().map(move |m| h * m))
            .collect()
    }

    pub fn fibre_stiffness(&self) -> &Csr<f64> {
        &self.kn
    }

    pub fn fibre_mass(&self) -> &[f64] {
        &self.fibre_mass
    }

    /// `c_e = ε² h M (D_e u + ω'_e L ū_e)` for base cell `e`.
    fn cell_flux(&self, u: &[f64], e: usize) -> Vec<f64> {
        let nf = self.grid.len();
        let zero = vec![0.0; nf];
        let left = if e >= 1 { &u[(e - 1) * nf..e * nf] } else { &zero[..] };
        let right = if e < self.slices() { &u[e * nf..(e + 1) * nf] } else { &zero[..] };
        let w = self.rate[e];
        let mut b: Vec<f64> = left.iter().zip(right).map(|(a, c)| (c - a) / self.h).collect();
        if w != 0.0 {
            let avg: Vec<f64> = left.iter().zip(right).map(|(a, c)| 0.5 * (a + c)).collect();
            let lu = self.l.matvec(&avg);
            b.iter_mut().zip(&lu).for_each(|(bi, li)| *bi += w * li);
        }
        let s = self.eps * self.eps * self.h;
        b.iter_mut().zip(&self.fibre_mass).for_each(|(bi, m)| *bi *= s * m);
        b
    }
}

impl SymOperator<f64> for TwistedOperator {
    fn dim(&self) -> usize {
        self.slices() * self.grid.len()
    }

    fn apply_into(&self, u: &[f64], y: &mut [f64]) {
        let nf = self.grid.len();
        let flux: Vec<Vec<f64>> = (0..self.nx).into_par_iter().map(|e| self.cell_flux(u, e)).collect();
        let lt_flux: Vec<Option<Vec<f64>>> = (0..self.nx)
            .into_par_iter()
            .map(|e| (self.rate[e] != 0.0).then(|| self.lt.matvec(&flux[e])))
            .collect();
        y.par_chunks_mut(nf).enumerate().for_each(|(t, yt)| {
            self.kn.matvec_into(&u[t * nf..(t + 1) * nf], yt);
            yt.iter_mut().for_each(|v| *v *= self.h);
            // slice t is the right end of cell t and the left end of cell t+1
            for (e, sign) in [(t, 1.0), (t + 1, -1.0)] {
                for (yi, c) in yt.iter_mut().zip(&flux[e]) {
                    *yi += sign * c / self.h;
                }
                if let Some(lc) = &lt_flux[e] {
                    let w = 0.5 * self.rate[e];
                    yt.iter_mut().zip(lc).for_each(|(yi, v)| *yi += w * v);
                }
            }
        });
    }

    fn diag(&self) -> Vec<f64> {
        let nf = self.grid.len();
        let kd = self.kn.diagonal();
        let col = &self.l_col_sq;
        let s = self.eps * self.eps * self.h;
        (0..self.slices())
            .flat_map(|t| {
                let kd = &kd;
                (0..nf).map(move |r| {
                    let mut d = self.h * kd[r];
                    for e in [t, t + 1] {
                        let w = 0.5 * self.rate[e];
                        d += s * (self.fibre_mass[r] / (self.h * self.h) + w * w * col[r]);
                    }
                    d
                })
            })
            .collect()
    }
}

/// Ground state of the twisted tube. `omega` is sampled on the `nx + 1` base
/// nodes. Only centred discs and ellipses are supported; the ellipse angle is
/// irrelevant because `L` commutes with rigid rotations.
pub fn solve_twisted_tube(
    shape: &CrossSectionShape,
    omega: &TwistProfile,
    eps: f64,
    base: BaseInterval,
    opts: &TwistedOptions,
) -> Result<FullSpectrum> {
    check_eps(eps)?;
    shape.validate()?;
    let (a, b) = match *shape {
        CrossSectionShape::Disc { radius, center: [0.0, 0.0] } => (radius, radius),
        CrossSectionShape::Ellipse { a, b, center: [0.0, 0.0], .. } => (a, b),
        _ => {
            return Err(WaveguideError::InvalidInput(
                "twisted tube needs a centred disc or ellipse fibre".into(),
            ))
        }
    };
    let nx = opts.nx;
    if nx < 4 || opts.n_fibre < 8 {
        return Err(WaveguideError::InvalidInput("twisted tube grid too coarse".into()));
    }
    if omega.len() != nx + 1 {
        return Err(WaveguideError::DimensionMismatch {
            expected: nx + 1,
            got: omega.len(),
            context: "twist profile vs base grid".into(),
        });
    }
    let grid = PolarGrid::new(a, b, opts.n_fibre / 2, 2 * (opts.n_fibre / 2))?;
    let unknowns = (nx - 1) * grid.len();
    if unknowns > opts.cap {
        return Err(WaveguideError::TooLarge { unknowns, cap: opts.cap });
    }
    let h = base.length() / nx as f64;
    let rate: Vec<f64> = omega.omega_prime.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let op = TwistedOperator::new(grid, rate, h, eps)?;

    // fibre ground state and a shift safely below the tube ground state
    let fibre = inverse_power(
        op.fibre_stiffness(),
        op.fibre_mass(),
        &InversePowerOptions {
            tol: 1e-13,
            cg_tol: 1e-12,
            cg_max: 50_000,
            ..Default::default()
        },
    )?;
    let lx = 4.0 / (h * h) * (std::f64::consts::PI * h / (2.0 * base.length())).sin().powi(2);
    let shift = fibre.value + 0.5 * eps * eps * lx;
    let init: Vec<f64> = (1..nx)
        .flat_map(|i| {
            let s = (std::f64::consts::PI * i as f64 / nx as f64).sin();
            fibre.vector.iter().map(move |v| s * v).collect::<Vec<_>>()
        })
        .collect();
    let mass = op.mass();
    let gs = inverse_power_from(
        &op,
        &mass,
        &InversePowerOptions {
            tol: opts.tol,
            max_outer: 200,
            cg_tol: 1e-10,
            cg_max: 200_000,
            shift,
        },
        Some(&init),
    )?;
    FullSpectrum {
        kind: FullKind::TwistedTube,
        eps,
        eigenvalues: vec![gs.value],
        residuals: vec![gs.residual],
        nx,
        nn: opts.n_fibre,
    }
    .checked()
}
