//! Effective operator on the base: potential assembly and the 1D spectral solve.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::cross_section::{FiberVolumeProfile, ModeData};
use crate::error::{Result, WaveguideError};
use crate::geometry::{ParallelFrame, TwistProfile};
use crate::linalg::SymTridiagonal;
use crate::profile::Profile;

/// Fibre scaling `F_x = f(x) F` sampled with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledFibres {
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
}

impl ScaledFibres {
    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            f: vec![value; n],
            fp: vec![0.0; n],
            fpp: vec![0.0; n],
        }
    }

    pub fn from_profile(profile: &Profile, x: &[f64]) -> Result<Self> {
        let (f, fp, fpp) = profile.sample(x)?;
        Ok(Self { f, fp, fpp })
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Accuracy scale of the effective operator: `α = 2` for constant `λ₀`,
/// `α = 1` when `λ₀` has a non-degenerate minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alpha {
    One,
    Two,
}

impl TryFrom<u32> for Alpha {
    type Error = WaveguideError;
    fn try_from(v: u32) -> Result<Self> {
        match v {
            1 => Ok(Alpha::One),
            2 => Ok(Alpha::Two),
            _ => Err(WaveguideError::InvalidInput(format!("alpha must be 1 or 2, got {v}"))),
        }
    }
}

/// All effective-potential terms on the base grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialBundle {
    pub x: Vec<f64>,
    pub lambda0: Vec<f64>,
    pub v_a: Vec<f64>,
    pub v_bend_a: Vec<f64>,
    pub v_hollow: Vec<f64>,
    /// Coefficient `m(x)` of the correction `−2ε³ (m ψ')'`.
    pub eps3_div_coeff: Vec<f64>,
    /// Potential multiplying `ε³`.
    pub eps3_pot: Vec<f64>,
    pub eps: f64,
}

impl PotentialBundle {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.x.len();
        for (name, v) in [
            ("lambda0", &self.lambda0),
            ("v_a", &self.v_a),
            ("v_bend_a", &self.v_bend_a),
            ("v_hollow", &self.v_hollow),
            ("eps3_div_coeff", &self.eps3_div_coeff),
            ("eps3_pot", &self.eps3_pot),
        ] {
            if v.len() != n {
                return Err(WaveguideError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                    context: name.into(),
                });
            }
            if v.iter().any(|t| !t.is_finite()) {
                return Err(WaveguideError::InvalidInput(format!("non-finite entry in {name}")));
            }
        }
        if let Some(i) = self.v_a.iter().position(|v| *v < 0.0) {
            return Err(WaveguideError::InvalidInput(format!(
                "adiabatic potential negative ({}) at x = {}",
                self.v_a[i], self.x[i]
            )));
        }
        Ok(())
    }

    /// Pointwise potential `λ₀ + ε²(V_a + V_bend^a) + V_hollow + ε³ pot`.
    pub fn total_potential(&self) -> Vec<f64> {
        let e2 = self.eps * self.eps;
        let e3 = e2 * self.eps;
        (0..self.len())
            .map(|i| {
                self.lambda0[i] + e2 * (self.v_a[i] + self.v_bend_a[i]) + self.v_hollow[i] + e3 * self.eps3_pot[i]
            })
            .collect()
    }
}

/// Dirichlet operator `−(a ψ')' + V ψ` on the interior nodes, with
/// `a = ε² + 2ε³ m`, as a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct AdiabaticOperator {
    pub bundle: PotentialBundle,
    pub h: f64,
    matrix: SymTridiagonal<f64>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors on the full grid (zero at the Dirichlet ends), unit discrete `L²` norm.
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub residuals: Vec<f64>,
}

fn uniform_step(x: &[f64]) -> Result<f64> {
    if x.len() < 4 {
        return Err(WaveguideError::InvalidInput("base grid needs at least 4 nodes".into()));
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(WaveguideError::InvalidInput("base grid must be increasing".into()));
    }
    let tol = 1e-9 * h;
    if x.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return Err(WaveguideError::InvalidInput("base grid must be uniform".into()));
    }
    Ok(h)
}

impl AdiabaticOperator {
    pub fn new(bundle: PotentialBundle) -> Result<Self> {
        bundle.check()?;
        let h = uniform_step(&bundle.x)?;
        let eps = bundle.eps;
        let n = bundle.len();
        let a: Vec<f64> = bundle
            .eps3_div_coeff
            .iter()
            .map(|m| eps * eps + 2.0 * eps * eps * eps * m)
            .collect();
        let half: Vec<f64> = a.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        if let Some(i) = half.iter().position(|v| !(*v > 0.0)) {
            return Err(WaveguideError::InvalidInput(format!(
                "kinetic coefficient not positive at x = {}",
                bundle.x[i]
            )));
        }
        let v = bundle.total_potential();
        let h2 = h * h;
        let diag: Vec<f64> = (1..n - 1).map(|i| (half[i - 1] + half[i]) / h2 + v[i]).collect();
        let off: Vec<f64> = (1..n - 2).map(|i| -half[i] / h2).collect();
        let matrix = SymTridiagonal::new(diag, off)?;
        Ok(Self { bundle, h, matrix })
    }

    pub fn matrix(&self) -> &SymTridiagonal<f64> {
        &self.matrix
    }

    /// Applies the operator to grid values (Dirichlet ends ignored); returns interior values.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.matvec(&u[1..u.len() - 1])
    }
}

/// `V_bend(x, n) = −|κ|²/(4ρ²) − ε n·κ''/(2ρ³) − 5(ε n·κ')²/(4ρ⁴)`, `ρ = 1 − ε n·κ`.
pub fn vbend_pointwise(kappa: [f64; 2], dk: [f64; 2], d2k: [f64; 2], eps: f64, n: [f64; 2]) -> (f64, f64) {
    let rho = 1.0 - eps * (n[0] * kappa[0] + n[1] * kappa[1]);
    let k2 = kappa[0] * kappa[0] + kappa[1] * kappa[1];
    let nk1 = n[0] * dk[0] + n[1] * dk[1];
    let nk2 = n[0] * d2k[0] + n[1] * d2k[1];
    let v = -k2 / (4.0 * rho * rho) - eps * nk2 / (2.0 * rho.powi(3)) - 5.0 * (eps * nk1).powi(2) / (4.0 * rho.powi(4));
    (v, rho)
}

/// Adiabatic average `∫ V_bend(x, n) |φ₀(x, n)|² dn` for fibres `f(x) R(ω(x)) F`.
pub fn bending_potential_scaled(
    frame: &ParallelFrame,
    mode: &ModeData,
    eps: f64,
    fibres: &ScaledFibres,
    twist: Option<&TwistProfile>,
) -> Result<Vec<f64>> {
    if fibres.len() != frame.len() {
        return Err(WaveguideError::DimensionMismatch {
            expected: frame.len(),
            got: fibres.len(),
            context: "fibre scaling vs frame".into(),
        });
    }
    let (dk, d2k) = frame.kappa_derivatives();
    let to_2d = |p: [f64; 2]| if mode.codim() == 1 { [p[0], 0.0] } else { p };
    (0..frame.len())
        .map(|i| {
            let w = twist.map_or(0.0, |t| t.omega[i]);
            let (c, s) = (w.cos(), w.sin());
            let f = fibres.f[i];
            let mut acc = 0.0;
            for ((p, wt), v) in mode.points.iter().zip(&mode.weights).zip(&mode.phi0) {
                let q = to_2d(*p);
                let n = [f * (c * q[0] - s * q[1]), f * (s * q[0] + c * q[1])];
                let (vb, rho) = vbend_pointwise(frame.kappa[i], dk[i], d2k[i], eps, n);
                if rho <= 0.0 {
                    return Err(WaveguideError::SelfIntersection { eps, x: frame.x[i], rho });
                }
                acc += wt * v * v * vb;
            }
            Ok(acc)
        })
        .collect()
}

/// [`bending_potential_scaled`] for congruent, untwisted fibres.
pub fn bending_potential_d1(frame: &ParallelFrame, mode: &ModeData, eps: f64) -> Result<Vec<f64>> {
    bending_potential_scaled(frame, mode, eps, &ScaledFibres::constant(frame.len(), 1.0), None)
}

/// `(ω')² ‖LΦ₀‖²`.
pub fn twist_potential(tw: &TwistProfile, l_norm_sq: f64) -> Vec<f64> {
    tw.omega_prime.iter().map(|w| w * w * l_norm_sq).collect()
}

/// `Σ Ṙ^{(αβ)} Ṙ^{(γζ)} L_{(αβ),(γζ)}` with `Ṙ` the antisymmetric rate matrices
/// (`k × k`, one per node) and `L` the Gram matrix of `L_{αβ}Φ₀`, indexed by
/// pairs `α < β` in lexicographic order.
pub fn twist_potential_general(rdot: &[DMatrix<f64>], lmat: &DMatrix<f64>) -> Result<Vec<f64>> {
    let m = lmat.nrows();
    if lmat.ncols() != m {
        return Err(WaveguideError::DimensionMismatch {
            expected: m,
            got: lmat.ncols(),
            context: "L Gram matrix columns".into(),
        });
    }
    let scale = lmat.abs().max().max(1e-300);
    if (lmat - lmat.transpose()).abs().max() > 1e-12 * scale {
        return Err(WaveguideError::InvalidInput("L Gram matrix must be symmetric".into()));
    }
    if m > 0 && SymmetricEigen::new(lmat.clone()).eigenvalues.min() < -1e-10 * scale {
        return Err(WaveguideError::InvalidInput("L Gram matrix must be positive semidefinite".into()));
    }
    rdot.iter()
        .map(|r| {
            let k = r.nrows();
            if r.ncols() != k || k * (k.saturating_sub(1)) / 2 != m {
                return Err(WaveguideError::DimensionMismatch {
                    expected: m,
                    got: k * (k.saturating_sub(1)) / 2,
                    context: "rate matrix generators".into(),
                });
            }
            if (r + r.transpose()).abs().max() > 1e-12 * r.abs().max().max(1.0) {
                return Err(WaveguideError::InvalidInput("rate matrix must be antisymmetric".into()));
            }
            let coeffs: Vec<f64> = (0..k)
                .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
                .map(|(a, b)| r[(a, b)])
                .collect();
            let v = nalgebra::DVector::from_vec(coeffs);
            Ok((v.transpose() * lmat * &v)[(0, 0)])
        })
        .collect()
}

/// `ε²[½ (log|F_x|)'' + ¼ ((log|F_x|)')²]`.
pub fn hollow_potential(fv: &FiberVolumeProfile, eps: f64) -> Vec<f64> {
    fv.dlog
        .iter()
        .zip(&fv.d2log)
        .map(|(d1, d2)| eps * eps * (0.5 * d2 + 0.25 * d1 * d1))
        .collect()
}

/// First-order correction coefficient `m(x) = ∫ (n·κ)|φ₀|²` and the `ε³`
/// potential `−2∫ φ₀ ∂_x[(n·κ) ∂_x φ₀]` for fibres `f(x) F`.
///
/// With `A = ∫ ν Φ₀ SΦ₀` and `B = ∫ ν (SΦ₀)²` the latter equals
/// `2[(f' κ·A)' + (f'²/f) κ·B]`.
pub fn eps3_corrections_scaled(
    frame: &ParallelFrame,
    mode: &ModeData,
    fibres: &ScaledFibres,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if fibres.len() != frame.len() {
        return Err(WaveguideError::DimensionMismatch {
            expected: frame.len(),
            got: fibres.len(),
            context: "fibre scaling vs frame".into(),
        });
    }
    let (dk, _) = frame.kappa_derivatives();
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    let (ca, cb) = (mode.moment_a, mode.moment_b);
    let m = (0..frame.len()).map(|i| fibres.f[i] * dot(mode.com, frame.kappa[i])).collect();
    let pot = (0..frame.len())
        .map(|i| {
            let (f, fp, fpp) = (fibres.f[i], fibres.fp[i], fibres.fpp[i]);
            let k = frame.kappa[i];
            let d_fka = fpp * dot(k, ca) + fp * dot(dk[i], ca);
            2.0 * (d_fka + fp * fp / f * dot(k, cb))
        })
        .collect();
    Ok((m, pot))
}

/// [`eps3_corrections_scaled`] for congruent fibres.
pub fn eps3_corrections_d1(frame: &ParallelFrame, mode: &ModeData) -> Result<(Vec<f64>, Vec<f64>)> {
    eps3_corrections_scaled(frame, mode, &ScaledFibres::constant(frame.len(), 1.0))
}

/// Potential bundle for a massive waveguide with fibres `f(x) R(ω(x)) F`.
///
/// `centred` declares that `φ₀` is centred; then `V_bend^a = −|κ|²/4` and the
/// correction of order `ε` inside `V_bend` is dropped. Otherwise the full
/// bending average is used together with the first-order operator
/// `−2ε³(m ψ')'`. The `ε³` potential enters only for `α = 2`.
pub fn potential_bundle_massive(
    frame: &ParallelFrame,
    mode: &ModeData,
    twist: Option<&TwistProfile>,
    fibres: &ScaledFibres,
    eps: f64,
    alpha: Alpha,
    centred: bool,
) -> Result<PotentialBundle> {
    let n = frame.len();
    if fibres.len() != n {
        return Err(WaveguideError::DimensionMismatch {
            expected: n,
            got: fibres.len(),
            context: "fibre scaling vs frame".into(),
        });
    }
    if let Some(t) = twist {
        if t.len() != n {
            return Err(WaveguideError::DimensionMismatch {
                expected: n,
                got: t.len(),
                context: "twist profile vs frame".into(),
            });
        }
    }
    if !(eps > 0.0) {
        return Err(WaveguideError::InvalidInput("eps must be positive".into()));
    }
    let lambda0 = crate::cross_section::lambda0_profile(mode, &fibres.f)?;
    let (cf, lsq, cross) = (mode.c_f, mode.l_norm_sq, mode.s_l_cross);
    let v_a = (0..n)
        .map(|i| {
            let g = fibres.fp[i] / fibres.f[i];
            let w = twist.map_or(0.0, |t| t.omega_prime[i]);
            g * g * cf + 2.0 * g * w * cross + w * w * lsq
        })
        .collect();
    let v_bend_a = if centred {
        frame.kappa.iter().map(|k| -(k[0] * k[0] + k[1] * k[1]) / 4.0).collect()
    } else {
        bending_potential_scaled(frame, mode, eps, fibres, twist)?
    };
    let twisted = twist.is_some_and(|t| t.omega_prime.iter().any(|w| *w != 0.0));
    let curved = frame.kappa.iter().any(|k| k[0] != 0.0 || k[1] != 0.0);
    let (m, pot) = if curved {
        if twisted && (!centred || mode.moment_a.iter().chain(&mode.moment_b).any(|v| v.abs() > 1e-10)) {
            return Err(WaveguideError::InvalidInput(
                "order-eps^3 corrections for twisted non-symmetric fibres on curved bases are not supported".into(),
            ));
        }
        eps3_corrections_scaled(frame, mode, fibres)?
    } else {
        (vec![0.0; n], vec![0.0; n])
    };
    let div = if centred { vec![0.0; n] } else { m };
    let pot = match alpha {
        Alpha::One => vec![0.0; n],
        Alpha::Two => pot,
    };
    let b = PotentialBundle {
        x: frame.x.clone(),
        lambda0,
        v_a,
        v_bend_a,
        v_hollow: vec![0.0; n],
        eps3_div_coeff: div,
        eps3_pot: pot,
        eps,
    };
    b.check()?;
    Ok(b)
}

pub fn assemble_massive(
    frame: &ParallelFrame,
    mode: &ModeData,
    twist: Option<&TwistProfile>,
    fibres: &ScaledFibres,
    eps: f64,
    alpha: Alpha,
    centred: bool,
) -> Result<AdiabaticOperator> {
    AdiabaticOperator::new(potential_bundle_massive(frame, mode, twist, fibres, eps, alpha, centred)?)
}

/// `−ε² d²/dx² + hollow_potential` on a straight base.
pub fn assemble_hollow(x: &[f64], fv: &FiberVolumeProfile, eps: f64) -> Result<AdiabaticOperator> {
    let n = x.len();
    if fv.vol.len() != n {
        return Err(WaveguideError::DimensionMismatch {
            expected: n,
            got: fv.vol.len(),
            context: "fibre volume profile".into(),
        });
    }
    AdiabaticOperator::new(PotentialBundle {
        x: x.to_vec(),
        lambda0: vec![0.0; n],
        v_a: vec![0.0; n],
        v_bend_a: vec![0.0; n],
        v_hollow: hollow_potential(fv, eps),
        eps3_div_coeff: vec![0.0; n],
        eps3_pot: vec![0.0; n],
        eps,
    })
}

/// Lowest `n_eigs` eigenpairs by bisection and inverse iteration.
pub fn solve_1d(op: &AdiabaticOperator, n_eigs: usize) -> Result<Spectrum> {
    if n_eigs == 0 || n_eigs > op.matrix.len() {
        return Err(WaveguideError::InvalidInput(format!(
            "n_eigs must be in 1..={}, got {n_eigs}",
            op.matrix.len()
        )));
    }
    let pairs = op.matrix.lowest_eigenpairs(n_eigs)?;
    let worst = pairs.iter().map(|p| p.residual).fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(WaveguideError::NoConvergence {
            method: "tridiagonal eigensolver".into(),
            iterations: 0,
            residual: worst,
        });
    }
    let scale = op.h.sqrt().recip();
    Ok(Spectrum {
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        eigenvectors: Some(
            pairs
                .into_iter()
                .map(|p| {
                    let mut v = Vec::with_capacity(p.vector.len() + 2);
                    v.push(0.0);
                    v.extend(p.vector.iter().map(|e| e * scale));
                    v.push(0.0);
                    v
                })
                .collect(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::uniform_grid;

    fn flat_bundle(x: Vec<f64>, eps: f64, v: Vec<f64>) -> PotentialBundle {
        let n = x.len();
        PotentialBundle {
            x,
            lambda0: v,
            v_a: vec![0.0; n],
            v_bend_a: vec![0.0; n],
            v_hollow: vec![0.0; n],
            eps3_div_coeff: vec![0.0; n],
            eps3_pot: vec![0.0; n],
            eps,
        }
    }

    #[test]
    fn free_dirichlet_spectrum() {
        let x = uniform_grid(0.0, std::f64::consts::PI, 2000);
        let op = AdiabaticOperator::new(flat_bundle(x, 1.0, vec![0.0; 2001])).unwrap();
        let s = solve_1d(&op, 3).unwrap();
        for (j, v) in s.eigenvalues.iter().enumerate() {
            let exact = ((j + 1) * (j + 1)) as f64;
            assert!((v - exact).abs() < 1e-4, "{v} vs {exact}");
        }
    }

    #[test]
    fn harmonic_ground_state() {
        let x = uniform_grid(-10.0, 10.0, 20_000);
        let v = x.iter().map(|t| t * t).collect();
        let op = AdiabaticOperator::new(flat_bundle(x, 0.01, v)).unwrap();
        let s = solve_1d(&op, 1).unwrap();
        assert!((s.eigenvalues[0] - 0.01).abs() < 0.03 * 0.01);
    }

    #[test]
    fn hollow_values() {
        let fv = FiberVolumeProfile {
            vol: vec![1.0; 3],
            dlog: vec![1.0, 0.0, 0.0],
            d2log: vec![0.0, 0.0, 2.0],
        };
        let v = hollow_potential(&fv, 0.1);
        assert!((v[0] - 0.01 * 0.25).abs() < 1e-16);
        assert_eq!(v[1], 0.0);
        assert!((v[2] - 0.01).abs() < 1e-16);
    }

    #[test]
    fn rejects_negative_va() {
        let mut b = flat_bundle(uniform_grid(0.0, 1.0, 10), 0.1, vec![0.0; 11]);
        b.v_a[3] = -1.0;
        assert!(AdiabaticOperator::new(b).is_err());
    }

    #[test]
    fn general_twist_reduces_to_planar() {
        let r = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, -1.5, 0.0]);
        let l = DMatrix::from_element(1, 1, 0.3);
        let v = twist_potential_general(&[r], &l).unwrap();
        assert!((v[0] - 1.5 * 1.5 * 0.3).abs() < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(twist_potential_general(&[bad], &l).is_err());
        let wrong = DMatrix::from_element(3, 3, 0.0);
        assert!(twist_potential_general(&[wrong], &l).is_err());
    }
}
