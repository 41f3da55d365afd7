//! Iterative symmetric eigensolvers.
//!
//! * [`inverse_power`]: ground state of `K u = λ M u` (sparse `K`, diagonal `M`)
//!   by inverse iteration with a CG inner solve.
//! * [`lowest_eigenpairs`]: several lowest eigenpairs of a banded matrix by
//!   shift-and-invert subspace iteration with Rayleigh–Ritz projection.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::banded::{BandedCholesky, BandedSym};
use super::sparse::{pcg, Shifted, SymOperator};
use super::tridiag::EigenPair;
use crate::error::{Result, WaveguideError};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct InversePowerOptions {
    /// Stop when the relative change of the Rayleigh quotient and the relative
    /// residual both fall below this.
    pub tol: f64,
    pub max_outer: usize,
    pub cg_tol: f64,
    pub cg_max: usize,
    /// Shift `σ` below the sought eigenvalue; inner solves use `K − σ M`,
    /// which must stay positive definite.
    pub shift: f64,
}

impl Default for InversePowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_outer: 500,
            cg_tol: 1e-10,
            cg_max: 20_000,
            shift: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState<T> {
    pub value: T,
    /// Normalised so that `uᵀ M u = 1`, with non-negative sum.
    pub vector: Vec<T>,
    pub iterations: usize,
    /// `‖K u − λ M u‖ / ‖K u‖`.
    pub residual: f64,
}

/// Lowest eigenpair of the generalised problem `K u = λ M u` with `M = diag(mass)`.
pub fn inverse_power<T: Real, A: SymOperator<T> + ?Sized>(
    k: &A,
    mass: &[T],
    opts: &InversePowerOptions,
) -> Result<GroundState<T>> {
    inverse_power_from(k, mass, opts, None)
}

/// [`inverse_power`] started from `init` (all ones when `None`).
pub fn inverse_power_from<T: Real, A: SymOperator<T> + ?Sized>(
    k: &A,
    mass: &[T],
    opts: &InversePowerOptions,
    init: Option<&[T]>,
) -> Result<GroundState<T>> {
    let n = k.dim();
    if mass.len() != n {
        return Err(WaveguideError::DimensionMismatch {
            expected: n,
            got: mass.len(),
            context: "mass diagonal".into(),
        });
    }
    if mass.iter().any(|m| !(*m > T::zero())) {
        return Err(WaveguideError::InvalidInput("mass must be positive".into()));
    }
    let m_norm = |u: &[T]| -> T {
        u.iter()
            .zip(mass)
            .map(|(a, m)| *a * *a * *m)
            .sum::<T>()
            .sqrt()
    };
    let mut u = match init {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => {
            return Err(WaveguideError::DimensionMismatch {
                expected: n,
                got: v.len(),
                context: "initial vector".into(),
            })
        }
        None => vec![T::one(); n],
    };
    let sigma = T::lit(opts.shift);
    let shifted = Shifted { op: k, mass, sigma };
    let s = m_norm(&u);
    u.iter_mut().for_each(|v| *v = *v / s);
    let mut lambda = T::infinity();
    let mut w = u.clone();
    let tol = T::lit(opts.tol);
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_outer {
        let rhs: Vec<T> = u.iter().zip(mass).map(|(a, m)| *a * *m).collect();
        // warm start: previous iterate scaled by the current eigenvalue estimate
        if lambda.is_finite() && lambda > sigma {
            w.iter_mut().zip(&u).for_each(|(wi, ui)| *wi = *ui / (lambda - sigma));
        }
        pcg(&shifted, &rhs, &mut w, T::lit(opts.cg_tol), opts.cg_max)?;
        let nw = m_norm(&w);
        if !(nw > T::zero()) || !nw.is_finite() {
            return Err(WaveguideError::NoConvergence {
                method: "inverse power iteration".into(),
                iterations: it,
                residual: f64::NAN,
            });
        }
        let unew: Vec<T> = w.iter().map(|v| *v / nw).collect();
        let mut ku = vec![T::zero(); n];
        k.apply_into(&unew, &mut ku);
        let rq: T = ku.iter().zip(&unew).map(|(a, b)| *a * *b).sum();
        let rnorm = ku
            .iter()
            .zip(&unew)
            .zip(mass)
            .map(|((a, b), m)| (*a - rq * *m * *b).powi(2))
            .sum::<T>()
            .sqrt();
        let kn = ku.iter().map(|a| *a * *a).sum::<T>().sqrt();
        let res = rnorm / kn;
        residual = res.to_f64().unwrap_or(f64::NAN);
        let change = (rq - lambda).abs() / rq.abs();
        u = unew;
        lambda = rq;
        if change <= tol && res <= tol.sqrt() * T::lit(1e-3) {
            let sum: T = u.iter().copied().sum();
            if sum < T::zero() {
                u.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(GroundState {
                value: lambda,
                vector: u,
                iterations: it,
                residual,
            });
        }
    }
    Err(WaveguideError::NoConvergence {
        method: "inverse power iteration".into(),
        iterations: opts.max_outer,
        residual,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SubspaceOptions {
    pub count: usize,
    /// Additional guard vectors carried in the block.
    pub extra: usize,
    /// Residual target relative to `max(|θ|, 1)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial shift; should lie below the lowest eigenvalue.
    pub initial_shift: Option<f64>,
    /// Maximum number of shift updates (each costs one factorisation).
    pub max_refactor: usize,
    pub seed: u64,
}

impl Default for SubspaceOptions {
    fn default() -> Self {
        Self {
            count: 1,
            extra: 4,
            tol: 1e-10,
            max_iter: 1000,
            initial_shift: None,
            max_refactor: 12,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceResult {
    pub pairs: Vec<EigenPair<f64>>,
    pub iterations: usize,
    pub factorizations: usize,
    pub shift: f64,
}

fn factor_below(a: &BandedSym<f64>, sigma: f64) -> Result<BandedCholesky<f64>> {
    let mut s = a.clone();
    s.shift_diagonal(sigma);
    s.cholesky()
}

/// Finds a shift at or below `sigma0` for which `A − σI` is positive definite.
fn safe_factor(a: &BandedSym<f64>, sigma0: f64, scale: f64) -> Result<(f64, BandedCholesky<f64>, usize)> {
    let mut sigma = sigma0;
    let mut step = (0.05 * sigma0.abs()).max(1e-8 * scale);
    for attempt in 1..=60 {
        match factor_below(a, sigma) {
            Ok(c) => return Ok((sigma, c, attempt)),
            Err(WaveguideError::NotPositiveDefinite { .. }) => {
                sigma -= step;
                step *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    Err(WaveguideError::NoConvergence {
        method: "shift search".into(),
        iterations: 60,
        residual: f64::NAN,
    })
}

fn orthonormalize(cols: &mut [Vec<f64>]) -> Result<()> {
    for pass in 0..2 {
        for j in 0..cols.len() {
            let (done, rest) = cols.split_at_mut(j);
            let v = &mut rest[0];
            for q in done.iter() {
                let d: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(n > 1e-300) {
                return Err(WaveguideError::NoConvergence {
                    method: format!("subspace orthonormalisation (pass {pass})"),
                    iterations: j,
                    residual: n,
                });
            }
            v.iter_mut().for_each(|a| *a /= n);
        }
    }
    Ok(())
}

/// Lowest `opts.count` eigenpairs of the symmetric banded matrix `a`.
pub fn lowest_eigenpairs(a: &BandedSym<f64>, opts: &SubspaceOptions) -> Result<SubspaceResult> {
    let n = a.len();
    if opts.count == 0 || opts.count > n {
        return Err(WaveguideError::InvalidInput(format!(
            "requested {} eigenpairs of a {n}x{n} matrix",
            opts.count
        )));
    }
    if !a.is_finite() {
        return Err(WaveguideError::InvalidInput("non-finite matrix entry".into()));
    }
    let p = (opts.count + opts.extra.max(1)).min(n);
    let norm = a.norm_inf().max(1e-300);
    let (glo, _) = a.gershgorin();
    let sigma0 = opts.initial_shift.unwrap_or(glo - 1e-8 * norm);
    let (mut sigma, mut chol, mut factorizations) = safe_factor(a, sigma0, norm)?;
    let mut refactors = 0;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut x)?;

    let floor = 100.0 * f64::EPSILON * norm;
    let mut last_res = vec![f64::INFINITY; p];
    for it in 1..=opts.max_iter {
        let mut y: Vec<Vec<f64>> = x.par_iter().map(|c| chol.solve(c)).collect();
        orthonormalize(&mut y)?;
        let ay: Vec<Vec<f64>> = y.par_iter().map(|c| a.matvec(c)).collect();
        let h = DMatrix::from_fn(p, p, |i, j| {
            let s: f64 = y[i].iter().zip(&ay[j]).map(|(u, v)| u * v).sum();
            let t: f64 = y[j].iter().zip(&ay[i]).map(|(u, v)| u * v).sum();
            0.5 * (s + t)
        });
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let theta: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (b, v) in basis.iter().zip(eig.eigenvectors.column(col).iter()) {
                out.iter_mut().zip(b).for_each(|(o, bi)| *o += v * bi);
            }
            out
        };
        x = order.par_iter().map(|&k| combine(&y, k)).collect();
        let ax: Vec<Vec<f64>> = order.par_iter().map(|&k| combine(&ay, k)).collect();
        let res: Vec<f64> = (0..p)
            .map(|k| {
                x[k].iter()
                    .zip(&ax[k])
                    .map(|(u, v)| (v - theta[k] * u).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        let converged = (0..opts.count).all(|k| res[k] <= (opts.tol * theta[k].abs().max(1.0)).max(floor));
        // stagnation at round-off level also counts as converged
        let stalled = it > 20
            && (0..opts.count).all(|k| res[k] <= 1e3 * floor && res[k] >= 0.9 * last_res[k]);
        if converged || stalled {
            let pairs = (0..opts.count)
                .map(|k| {
                    let mut v = x[k].clone();
                    let pivot = v.iter().copied().fold(0.0f64, |m, e| if e.abs() > m.abs() { e } else { m });
                    if pivot < 0.0 {
                        v.iter_mut().for_each(|e| *e = -*e);
                    }
                    EigenPair {
                        value: theta[k],
                        vector: v,
                        residual: res[k] / norm,
                    }
                })
                .collect();
            return Ok(SubspaceResult {
                pairs,
                iterations: it,
                factorizations,
                shift: sigma,
            });
        }
        last_res = res.clone();
        if refactors < opts.max_refactor && it >= 3 && p >= 2 {
            // a successful factorisation certifies σ below the spectrum, so the
            // shift can follow the Ritz values aggressively
            let gap = (theta[1] - theta[0]).max(0.0);
            let margin = (2.0 * res[0]).max(0.5 * gap).max(1e-12 * theta[0].abs());
            let target = theta[0] - margin;
            if target > sigma + 0.5 * (theta[0] - sigma) {
                refactors += 1;
                for cand in [target, 0.5 * (sigma + target)] {
                    if let Ok(c) = factor_below(a, cand) {
                        chol = c;
                        sigma = cand;
                        factorizations += 1;
                        break;
                    }
                }
            }
        }
    }
    Err(WaveguideError::NoConvergence {
        method: "shift-invert subspace iteration".into(),
        iterations: opts.max_iter,
        residual: last_res.first().copied().unwrap_or(f64::NAN),
    })
}

/// Lowest eigenpairs of `K u = λ M u` with `K` banded and `M = diag(mass)`.
/// Returned vectors satisfy `uᵀ M u = 1`.
pub fn generalized_lowest(
    mut k: BandedSym<f64>,
    mass: &[f64],
    opts: &SubspaceOptions,
) -> Result<SubspaceResult> {
    if mass.len() != k.len() {
        return Err(WaveguideError::DimensionMismatch {
            expected: k.len(),
            got: mass.len(),
            context: "mass diagonal".into(),
        });
    }
    if mass.iter().any(|m| !(*m > 0.0)) {
        return Err(WaveguideError::InvalidInput("mass must be positive".into()));
    }
    let d: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    k.scale_symmetric(&d);
    let mut out = lowest_eigenpairs(&k, opts)?;
    for p in out.pairs.iter_mut() {
        p.vector.iter_mut().zip(&d).for_each(|(v, di)| *v *= di);
    }
    Ok(out)
}
