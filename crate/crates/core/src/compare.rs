//! Pairing of effective and full spectra over an ε-sweep, Richardson
//! extrapolation in the grid, and empirical convergence orders.

use rayon::prelude::*;

use crate::adiabatic::{assemble_hollow, assemble_massive, solve_1d, Alpha, ScaledFibres, Spectrum};
use crate::cross_section::{interval_mode_exact, CrossSectionShape, FiberVolumeProfile};
use crate::error::{Result, WaveguideError};
use crate::geometry::ParallelFrame;
use crate::profile::{uniform_grid, Profile};
use crate::reference::{solve_hollow_surface, solve_strip, BaseInterval, FullSpectrum};

/// Default sweep grid: geometric with ratio √2.
pub const DEFAULT_EPS: [f64; 5] = [0.2, 0.141, 0.1, 0.071, 0.05];

/// Errors below this are indistinguishable from round-off and are left out of fits.
pub const ERROR_FLOOR: f64 = 1e-10;

/// Largest allowed change of the fitted slope when one ε point is dropped.
pub const LEAVE_ONE_OUT_TOL: f64 = 0.3;

/// Discretization error allowed relative to the smallest ε-error.
pub const DISCRETIZATION_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    /// Difference between the final estimate and the one obtained without the finest grid.
    pub error_estimate: f64,
    /// False when successive differences do not shrink monotonically.
    pub monotone: bool,
}

/// Repeated Richardson elimination for values on grids refined by 2, with
/// error expansion in powers `p, p + 2, p + 4, …` of `h`.
pub fn richardson(values: &[f64], order: f64) -> Result<Extrapolation> {
    if values.len() < 2 {
        return Err(WaveguideError::InvalidInput("richardson needs at least two refinements".into()));
    }
    if !(order > 0.0) {
        return Err(WaveguideError::InvalidInput("richardson order must be positive".into()));
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = diffs.windows(2).all(|d| d[0] * d[1] >= 0.0 && d[1].abs() <= d[0].abs());
    let mut level = values.to_vec();
    let mut p = order;
    while level.len() > 1 {
        let r = 2f64.powf(p);
        level = level.windows(2).map(|w| (r * w[1] - w[0]) / (r - 1.0)).collect();
        p += 2.0;
    }
    let value = level[0];
    let error_estimate = if values.len() == 2 {
        (value - values[1]).abs()
    } else {
        // estimate from the same elimination without the finest grid
        let coarse = richardson(&values[..values.len() - 1], order)?.value;
        (value - coarse).abs()
    };
    Ok(Extrapolation { value, error_estimate, monotone })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub points: usize,
}

/// Least-squares fit of `log err = slope · log ε + intercept`.
pub fn fit_power_law(eps: &[f64], err: &[f64]) -> Result<PowerFit> {
    if eps.len() != err.len() {
        return Err(WaveguideError::DimensionMismatch {
            expected: eps.len(),
            got: err.len(),
            context: "power-law fit".into(),
        });
    }
    if eps.len() < 2 {
        return Err(WaveguideError::InvalidInput("power-law fit needs at least two points".into()));
    }
    if eps.iter().chain(err).any(|v| !(*v > 0.0)) {
        return Err(WaveguideError::InvalidInput("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = eps.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(WaveguideError::InvalidInput("power-law fit needs distinct eps values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(PowerFit { slope, intercept, residual, points: lx.len() })
}

/// Fit results for one eigenvalue index.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub index: usize,
    pub fit: Option<PowerFit>,
    /// Largest slope change when one ε point is left out.
    pub leave_one_out: f64,
    /// Indices into `eps_values` excluded for falling below [`ERROR_FLOOR`].
    pub excluded: Vec<usize>,
}

impl OrderFit {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Strictly decreasing.
    pub eps_values: Vec<f64>,
    /// Continuum estimates of the effective eigenvalues, `[ε][j]`.
    pub mu: Vec<Vec<f64>>,
    /// Continuum estimates of the full eigenvalues, `[ε][j]`.
    pub nu: Vec<Vec<f64>>,
    /// `|μ_j − ν_j|`, `[ε][j]`.
    pub paired_errors: Vec<Vec<f64>>,
    /// Combined grid-error estimate of `μ_j` and `ν_j`, `[ε][j]`.
    pub discretization: Vec<Vec<f64>>,
    pub fits: Vec<OrderFit>,
    pub theory_order: f64,
    pub min_order: f64,
    /// Non-monotone Richardson sequences, as `(ε index, j)`.
    pub non_monotone: Vec<(usize, usize)>,
    pub config_hash: String,
}

/// Per-ε input for [`pair_and_fit`]: extrapolated eigenvalues and their grid errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub eps: f64,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu_disc: Vec<f64>,
    pub nu_disc: Vec<f64>,
    pub non_monotone: Vec<usize>,
}

impl SweepPoint {
    /// Exact spectra without grid-error information.
    pub fn exact(eps: f64, mu: Vec<f64>, nu: Vec<f64>) -> Self {
        let n = mu.len();
        Self {
            eps,
            mu,
            nu,
            mu_disc: vec![0.0; n],
            nu_disc: vec![0.0; n],
            non_monotone: Vec::new(),
        }
    }

    pub fn from_spectra(adiabatic: &Spectrum, full: &FullSpectrum) -> Self {
        Self::exact(full.eps, adiabatic.eigenvalues.clone(), full.eigenvalues.clone())
    }
}

/// Number of leading indices whose full eigenvalues stay inside the window
/// `Λ₀ + C ε^α` at every sweep point.
pub fn window_count(points: &[SweepPoint], lambda_min: f64, c: f64, alpha: f64) -> usize {
    points
        .iter()
        .map(|p| {
            let top = lambda_min + c * p.eps.powf(alpha);
            let mut nu = p.nu.clone();
            nu.sort_by(f64::total_cmp);
            nu.iter().take_while(|v| **v <= top).count()
        })
        .min()
        .unwrap_or(0)
}

impl SweepPoint {
    /// Keeps the lowest `n` eigenvalues on both sides.
    pub fn truncated(&self, n: usize) -> Self {
        let keep = |v: &[f64]| v[..n.min(v.len())].to_vec();
        Self {
            eps: self.eps,
            mu: keep(&self.mu),
            nu: keep(&self.nu),
            mu_disc: keep(&self.mu_disc),
            nu_disc: keep(&self.nu_disc),
            non_monotone: self.non_monotone.iter().copied().filter(|&j| j < n).collect(),
        }
    }
}

fn leave_one_out(eps: &[f64], err: &[f64], base: f64) -> f64 {
    if eps.len() < 3 {
        return f64::INFINITY;
    }
    (0..eps.len())
        .filter_map(|skip| {
            let e: Vec<f64> = eps.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
            let r: Vec<f64> = err.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
            fit_power_law(&e, &r).ok().map(|f| (f.slope - base).abs())
        })
        .fold(0.0, f64::max)
}

/// Pairs eigenvalues by sorted index and fits `log|μ_j − ν_j|` against `log ε`.
/// Points are sorted by decreasing ε first, so the input order is irrelevant.
pub fn pair_and_fit(points: &[SweepPoint], theory_order: f64, min_order: f64) -> Result<SweepReport> {
    if points.is_empty() {
        return Err(WaveguideError::InvalidInput("empty sweep".into()));
    }
    let mut pts: Vec<SweepPoint> = points.to_vec();
    pts.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    if pts.windows(2).any(|w| !(w[1].eps < w[0].eps)) {
        return Err(WaveguideError::InvalidInput("eps values must be distinct".into()));
    }
    let count = pts[0].mu.len();
    for p in &pts {
        if p.mu.len() != count || p.nu.len() != count || p.mu_disc.len() != count || p.nu_disc.len() != count {
            return Err(WaveguideError::DimensionMismatch {
                expected: count,
                got: p.nu.len(),
                context: format!("eigenvalue count at eps = {}", p.eps),
            });
        }
    }
    let sorted = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        idx
    };
    let mut mu = Vec::new();
    let mut nu = Vec::new();
    let mut errors: Vec<Vec<f64>> = Vec::new();
    let mut disc: Vec<Vec<f64>> = Vec::new();
    let mut non_monotone = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let (im, inu) = (sorted(&p.mu), sorted(&p.nu));
        let m: Vec<f64> = im.iter().map(|&k| p.mu[k]).collect();
        let n: Vec<f64> = inu.iter().map(|&k| p.nu[k]).collect();
        errors.push(m.iter().zip(&n).map(|(a, b)| (a - b).abs()).collect());
        disc.push((0..count).map(|j| p.mu_disc[im[j]] + p.nu_disc[inu[j]]).collect());
        non_monotone.extend(p.non_monotone.iter().map(|&j| (i, j)));
        mu.push(m);
        nu.push(n);
    }
    let eps_values: Vec<f64> = pts.iter().map(|p| p.eps).collect();
    let fits = (0..count)
        .map(|j| {
            let mut e = Vec::new();
            let mut r = Vec::new();
            let mut excluded = Vec::new();
            for (i, row) in errors.iter().enumerate() {
                let v: f64 = row[j];
                if v < ERROR_FLOOR {
                    excluded.push(i);
                } else {
                    e.push(eps_values[i]);
                    r.push(v);
                }
            }
            let fit = fit_power_law(&e, &r).ok();
            let loo = fit.map_or(f64::INFINITY, |f| leave_one_out(&e, &r, f.slope));
            OrderFit { index: j, fit, leave_one_out: loo, excluded }
        })
        .collect();
    non_monotone.sort_unstable();
    Ok(SweepReport {
        eps_values,
        mu,
        nu,
        paired_errors: errors,
        discretization: disc,
        fits,
        theory_order,
        min_order,
        non_monotone,
        config_hash: String::new(),
    })
}

impl SweepReport {
    /// Errors unless every grid-error estimate is at most
    /// [`DISCRETIZATION_FRACTION`] of the smallest ε-error of its index.
    pub fn check_discretization(&self) -> Result<()> {
        for j in 0..self.fits.len() {
            let smallest = self
                .paired_errors
                .iter()
                .map(|r| r[j])
                .filter(|v| *v >= ERROR_FLOOR)
                .fold(f64::INFINITY, f64::min);
            let worst = self.discretization.iter().map(|r| r[j]).fold(0.0, f64::max);
            if worst > DISCRETIZATION_FRACTION * smallest {
                return Err(WaveguideError::SweepRejected(format!(
                    "index {j}: grid error {worst:.3e} exceeds {DISCRETIZATION_FRACTION} x smallest eps-error {smallest:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Per-index verdict: fitted order at least `min_order` and leave-one-out
    /// spread below [`LEAVE_ONE_OUT_TOL`].
    pub fn passed(&self, j: usize) -> bool {
        let f = &self.fits[j];
        f.slope().is_some_and(|s| s >= self.min_order) && f.leave_one_out < LEAVE_ONE_OUT_TOL
    }

    pub fn all_passed(&self) -> bool {
        (0..self.fits.len()).all(|j| self.passed(j))
    }

    /// One line per eigenvalue index.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for f in &self.fits {
            let slope = f.slope().map_or_else(|| "n/a".to_string(), |s| format!("{s:.4}"));
            out.push_str(&format!(
                "index {}: theory order {:.1}, fitted order {}, leave-one-out {:.3}, excluded {}, {}\n",
                f.index,
                self.theory_order,
                slope,
                f.leave_one_out,
                f.excluded.len(),
                if self.passed(f.index) { "pass" } else { "fail" }
            ));
        }
        out
    }
}

/// Extrapolates a sequence of eigenvalue lists (coarse to fine).
fn extrapolate(levels: &[Vec<f64>], order: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let count = levels[0].len();
    let mut value = Vec::with_capacity(count);
    let mut err = Vec::with_capacity(count);
    let mut bad = Vec::new();
    for j in 0..count {
        let seq: Vec<f64> = levels.iter().map(|l| l[j]).collect();
        let r = richardson(&seq, order)?;
        value.push(r.value);
        err.push(r.error_estimate);
        if !r.monotone {
            bad.push(j);
        }
    }
    Ok((value, err, bad))
}

/// Varying-width strip: full solver against the `α = 1` effective operator.
#[derive(Debug, Clone, PartialEq)]
pub struct StripSweep {
    pub profile: Profile,
    pub base: BaseInterval,
    pub eps_values: Vec<f64>,
    /// `(nx, ns)` per refinement level, each doubling the previous.
    pub grids: Vec<(usize, usize)>,
    pub count: usize,
    pub min_order: f64,
}

impl StripSweep {
    pub fn point(&self, eps: f64) -> Result<SweepPoint> {
        if self.grids.len() < 2 {
            return Err(WaveguideError::InvalidInput("sweep needs at least two grids".into()));
        }
        let mode = interval_mode_exact(1.0, 64)?;
        let mut full = Vec::new();
        let mut adi = Vec::new();
        for &(nx, ns) in &self.grids {
            full.push(solve_strip(&self.profile, eps, self.base, nx, ns, self.count)?.eigenvalues);
            let x = uniform_grid(self.base.x0, self.base.x1, nx);
            let frame = ParallelFrame::straight(x.clone())?;
            let fibres = ScaledFibres::from_profile(&self.profile, &x)?;
            let op = assemble_massive(&frame, &mode, None, &fibres, eps, Alpha::One, true)?;
            adi.push(solve_1d(&op, self.count)?.eigenvalues);
        }
        let (mu, mu_disc, mut bad) = extrapolate(&adi, 2.0)?;
        let (nu, nu_disc, bad_nu) = extrapolate(&full, 2.0)?;
        bad.extend(bad_nu);
        bad.sort_unstable();
        bad.dedup();
        Ok(SweepPoint { eps, mu, nu, mu_disc, nu_disc, non_monotone: bad })
    }

    pub fn run(&self) -> Result<SweepReport> {
        let pts: Result<Vec<SweepPoint>> = self.eps_values.par_iter().map(|&e| self.point(e)).collect();
        pair_and_fit(&pts?, 3.0, self.min_order)
    }
}

/// Hollow surface of revolution, angular mode 0, against the hollow effective operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HollowSweep {
    pub profile: Profile,
    pub base: BaseInterval,
    pub eps_values: Vec<f64>,
    /// `nx` per refinement level, each doubling the previous.
    pub grids: Vec<usize>,
    pub count: usize,
    pub min_order: f64,
}

impl HollowSweep {
    pub fn point(&self, eps: f64) -> Result<SweepPoint> {
        if self.grids.len() < 2 {
            return Err(WaveguideError::InvalidInput("sweep needs at least two grids".into()));
        }
        let circle = CrossSectionShape::disc(1.0);
        let mut full = Vec::new();
        let mut adi = Vec::new();
        for &nx in &self.grids {
            full.push(solve_hollow_surface(&self.profile, eps, 0, self.base, nx, self.count)?.eigenvalues);
            let x = uniform_grid(self.base.x0, self.base.x1, nx);
            let (f, fp, fpp) = self.profile.sample(&x)?;
            let fv = FiberVolumeProfile::from_derivatives(&circle, &f, &fp, &fpp)?;
            adi.push(solve_1d(&assemble_hollow(&x, &fv, eps)?, self.count)?.eigenvalues);
        }
        let (mu, mu_disc, mut bad) = extrapolate(&adi, 2.0)?;
        let (nu, nu_disc, bad_nu) = extrapolate(&full, 2.0)?;
        bad.extend(bad_nu);
        bad.sort_unstable();
        bad.dedup();
        Ok(SweepPoint { eps, mu, nu, mu_disc, nu_disc, non_monotone: bad })
    }

    pub fn run(&self) -> Result<SweepReport> {
        let pts: Result<Vec<SweepPoint>> = self.eps_values.par_iter().map(|&e| self.point(e)).collect();
        pair_and_fit(&pts?, 3.0, self.min_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_cancels_quadratic_error() {
        let v = [1.0 + 0.01, 1.0 + 0.0025];
        assert!((richardson(&v, 2.0).unwrap().value - 1.0).abs() < 1e-12);
        let c = richardson(&[3.5, 3.5, 3.5], 2.0).unwrap();
        assert_eq!(c.value, 3.5);
        assert!(c.monotone);
    }

    #[test]
    fn non_monotone_is_flagged() {
        let r = richardson(&[1.0, 1.1, 1.0], 2.0).unwrap();
        assert!(!r.monotone);
        assert!(richardson(&[1.0], 2.0).is_err());
    }

    #[test]
    fn exact_power_law_slope() {
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let err: Vec<f64> = eps.iter().map(|e| 2.0 * e * e * e).collect();
        let f = fit_power_law(&eps, &err).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-10);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn floor_points_are_excluded() {
        let pts: Vec<SweepPoint> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| SweepPoint::exact(e, vec![1.0], vec![1.0 + if e < 0.06 { 0.0 } else { e * e * e }]))
            .collect();
        let r = pair_and_fit(&pts, 3.0, 2.5).unwrap();
        assert_eq!(r.fits[0].excluded, vec![2]);
        assert!((r.fits[0].slope().unwrap() - 3.0).abs() < 1e-10);
    }
}
