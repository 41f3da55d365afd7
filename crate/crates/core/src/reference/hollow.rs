//! Angular modes of the Laplace–Beltrami operator on the surface of revolution
//! `r = ε f(x)`.

use super::{check_eps, BaseInterval, FullKind, FullSpectrum};
use crate::error::{Result, WaveguideError};
use crate::linalg::SymTridiagonal;
use crate::profile::Profile;

/// Lowest `count` eigenvalues of `−ε²(fA)⁻¹ d/dx[(f/A) d/dx] + m²/f²`,
/// `A = √(1 + ε²f'²)`, on `nx` cells with Dirichlet ends. The weighted form on
/// `L²(fA dx)` is symmetrized by `D^{−1/2} K D^{−1/2}`.
pub fn solve_hollow_surface(
    f: &Profile,
    eps: f64,
    m: u32,
    base: BaseInterval,
    nx: usize,
    count: usize,
) -> Result<FullSpectrum> {
    check_eps(eps)?;
    f.validate()?;
    if nx < 4 {
        return Err(WaveguideError::InvalidInput("hollow grid needs nx >= 4".into()));
    }
    let h = base.length() / nx as f64;
    let e2 = eps * eps;
    let m2 = f64::from(m * m);
    let area = |x: f64| (1.0 + e2 * f.d1(x).powi(2)).sqrt();
    let node = |i: usize| base.x0 + h * i as f64;
    let fv: Vec<f64> = (0..=nx).map(|i| f.value(node(i))).collect();
    if let Some(i) = fv.iter().position(|v| !(*v > 0.0)) {
        return Err(WaveguideError::InvalidInput(format!("profile not positive at x = {}", node(i))));
    }
    // flux coefficients (f/A) at cell midpoints
    let flux: Vec<f64> = (0..nx)
        .map(|i| {
            let x = base.x0 + h * (i as f64 + 0.5);
            e2 * f.value(x) / area(x) / (h * h)
        })
        .collect();
    let weight: Vec<f64> = (1..nx).map(|i| fv[i] * area(node(i))).collect();
    let inv_sqrt: Vec<f64> = weight.iter().map(|w| 1.0 / w.sqrt()).collect();
    let diag: Vec<f64> = (1..nx)
        .map(|i| {
            let w = &weight[i - 1];
            (flux[i - 1] + flux[i]) / w + m2 / (fv[i] * fv[i])
        })
        .collect();
    let off: Vec<f64> = (1..nx - 1)
        .map(|i| -flux[i] * inv_sqrt[i - 1] * inv_sqrt[i])
        .collect();
    let t = SymTridiagonal::new(diag, off)?;
    if count == 0 || count > t.len() {
        return Err(WaveguideError::InvalidInput(format!("cannot compute {count} eigenvalues")));
    }
    let pairs = t.lowest_eigenpairs(count)?;
    FullSpectrum {
        kind: FullKind::HollowSurface { m },
        eps,
        eigenvalues: pairs.iter().map(|p| p.value).collect(),
        residuals: pairs.iter().map(|p| p.residual).collect(),
        nx,
        nn: 0,
    }
    .checked()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_cylinder() {
        let base = BaseInterval::new(0.0, 2.0).unwrap();
        let eps = 0.1;
        for m in [0u32, 1] {
            let s = solve_hollow_surface(&Profile::Constant { value: 1.0 }, eps, m, base, 4000, 3).unwrap();
            for (j, v) in s.eigenvalues.iter().enumerate() {
                let jj = (j + 1) as f64;
                let exact = f64::from(m * m) + eps * eps * PI * PI * jj * jj / 4.0;
                assert!(((v - exact) / exact).abs() < 1e-4, "m={m}: {v} vs {exact}");
            }
        }
    }
}
