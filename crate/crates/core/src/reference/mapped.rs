//! Strip and axisymmetric tube on the mapped rectangle `s = n/f(x)`, discretized
//! by bilinear elements with two-point element quadrature and a lumped mass matrix.

use super::{check_eps, FullKind, FullSpectrum};
use crate::error::{Result, WaveguideError};
use crate::linalg::{generalized_lowest, BandedSym, SubspaceOptions};
use crate::profile::Profile;

/// Base interval `[x0, x1]` with Dirichlet ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseInterval {
    pub x0: f64,
    pub x1: f64,
}

impl BaseInterval {
    pub fn new(x0: f64, x1: f64) -> Result<Self> {
        if !(x1 > x0) || !x0.is_finite() || !x1.is_finite() {
            return Err(WaveguideError::InvalidInput(format!("invalid base interval [{x0}, {x1}]")));
        }
        Ok(Self { x0, x1 })
    }

    pub fn length(&self) -> f64 {
        self.x1 - self.x0
    }
}

/// Quadratic-form coefficients at `(x, s)`: `(a_xx, a_xs, a_ss, c, w)` for
/// `∫ a_xx v_x² + 2 a_xs v_x v_s + a_ss v_s² + c v²` and mass `∫ w v²`.
type Coeffs = [f64; 5];

struct MappedProblem<'a> {
    base: BaseInterval,
    nx: usize,
    s0: f64,
    s1: f64,
    ns: usize,
    /// Whether the `s = s0` edge carries a Dirichlet condition.
    dirichlet_s0: bool,
    s_rule: Rule,
    coeffs: &'a dyn Fn(f64, f64) -> Coeffs,
}

/// Two-point element quadrature on `[0, 1]`, weights ½.
#[derive(Debug, Clone, Copy)]
enum Rule {
    /// Endpoints: reproduces the five-point difference stencil on flat domains.
    Lobatto,
    /// Interior points: keeps the `r⁻¹` weight of the tube off the axis.
    Gauss,
}

impl Rule {
    fn points(self) -> [f64; 2] {
        match self {
            Rule::Lobatto => [0.0, 1.0],
            Rule::Gauss => [0.211_324_865_405_187_1, 0.788_675_134_594_812_9],
        }
    }
}

impl MappedProblem<'_> {
    fn first_s(&self) -> usize {
        usize::from(self.dirichlet_s0)
    }

    fn n_s_unknowns(&self) -> usize {
        self.ns - self.first_s()
    }

    fn unknown(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || i >= self.nx || j < self.first_s() || j >= self.ns {
            return None;
        }
        Some((i - 1) * self.n_s_unknowns() + (j - self.first_s()))
    }

    fn assemble(&self) -> (BandedSym<f64>, Vec<f64>) {
        let nsu = self.n_s_unknowns();
        let n = (self.nx - 1) * nsu;
        let hx = self.base.length() / self.nx as f64;
        let hs = (self.s1 - self.s0) / self.ns as f64;
        let mut k = BandedSym::zeros(n, nsu + 1);
        let mut mass = vec![0.0; n];
        // local node order: (0,0), (1,0), (0,1), (1,1) in (x, s)
        let corners = [(0usize, 0usize), (1, 0), (0, 1), (1, 1)];
        for ei in 0..self.nx {
            for ej in 0..self.ns {
                let ids: Vec<Option<usize>> =
                    corners.iter().map(|&(a, b)| self.unknown(ei + a, ej + b)).collect();
                if ids.iter().all(Option::is_none) {
                    continue;
                }
                let mut ke = [[0.0; 4]; 4];
                let mut me = [0.0; 4];
                for px in Rule::Lobatto.points() {
                    for ps in self.s_rule.points() {
                        let x = self.base.x0 + (ei as f64 + px) * hx;
                        let s = self.s0 + (ej as f64 + ps) * hs;
                        let [axx, axs, ass, c, w] = (self.coeffs)(x, s);
                        let wq = 0.25 * hx * hs;
                        let shape = [(1.0 - px) * (1.0 - ps), px * (1.0 - ps), (1.0 - px) * ps, px * ps];
                        let dx = [-(1.0 - ps) / hx, (1.0 - ps) / hx, -ps / hx, ps / hx];
                        let ds = [-(1.0 - px) / hs, -px / hs, (1.0 - px) / hs, px / hs];
                        for p in 0..4 {
                            me[p] += wq * w * shape[p];
                            for q in 0..4 {
                                ke[p][q] += wq
                                    * (axx * dx[p] * dx[q]
                                        + axs * (dx[p] * ds[q] + ds[p] * dx[q])
                                        + ass * ds[p] * ds[q]
                                        + c * shape[p] * shape[q]);
                            }
                        }
                    }
                }
                for p in 0..4 {
                    let Some(ip) = ids[p] else { continue };
                    mass[ip] += me[p];
                    for q in 0..=p {
                        if let Some(iq) = ids[q] {
                            // symmetric storage: each unordered pair once
                            let v = if p == q { ke[p][p] } else { 0.5 * (ke[p][q] + ke[q][p]) };
                            k.add(ip, iq, v);
                        }
                    }
                }
            }
        }
        (k, mass)
    }
}

fn check_profile(f: &Profile, base: BaseInterval, nx: usize, eps: f64) -> Result<()> {
    f.validate()?;
    let h = base.length() / nx as f64;
    for i in 0..=2 * nx {
        let x = base.x0 + 0.5 * h * i as f64;
        let v = f.value(x);
        if !(v > 0.0) {
            return Err(WaveguideError::InvalidInput(format!("profile not positive at x = {x}")));
        }
        let slope = eps * f.d1(x);
        if !(slope.abs() < 1.0) {
            return Err(WaveguideError::ProfileTooRough { x, value: slope });
        }
    }
    Ok(())
}

fn solve(problem: &MappedProblem, kind: FullKind, eps: f64, count: usize) -> Result<FullSpectrum> {
    let (k, mass) = problem.assemble();
    if count == 0 || count > k.len() {
        return Err(WaveguideError::InvalidInput(format!("cannot compute {count} eigenvalues")));
    }
    let out = generalized_lowest(
        k,
        &mass,
        &SubspaceOptions {
            count,
            tol: 1e-11,
            ..Default::default()
        },
    )?;
    FullSpectrum {
        kind,
        eps,
        eigenvalues: out.pairs.iter().map(|p| p.value).collect(),
        residuals: out.pairs.iter().map(|p| p.residual).collect(),
        nx: problem.nx,
        nn: problem.ns,
    }
    .checked()
}

/// Lowest `count` eigenvalues of `−ε²∂_x² − ∂_n²` on `{|n| ≤ f(x)}` with
/// Dirichlet conditions everywhere; `ns` cells across `s ∈ [−1, 1]`.
pub fn solve_strip(
    f: &Profile,
    eps: f64,
    base: BaseInterval,
    nx: usize,
    ns: usize,
    count: usize,
) -> Result<FullSpectrum> {
    check_eps(eps)?;
    if nx < 4 || ns < 4 {
        return Err(WaveguideError::InvalidInput("strip grid needs nx, ns >= 4".into()));
    }
    check_profile(f, base, nx, eps)?;
    let e2 = eps * eps;
    let coeffs = |x: f64, s: f64| -> Coeffs {
        let (fv, fp) = (f.value(x), f.d1(x));
        [e2 * fv, -e2 * s * fp, e2 * s * s * fp * fp / fv + 1.0 / fv, 0.0, fv]
    };
    let problem = MappedProblem {
        base,
        nx,
        s0: -1.0,
        s1: 1.0,
        ns,
        dirichlet_s0: true,
        s_rule: Rule::Lobatto,
        coeffs: &coeffs,
    };
    solve(&problem, FullKind::Strip, eps, count)
}

/// Angular mode `m` of the tube `{|n| ≤ f(x)} ⊂ ℝ³`: the operator
/// `−ε²∂_x² − ∂_r² − r⁻¹∂_r + m²/r²` on `0 ≤ r ≤ f(x)`, `nr` cells across
/// `s = r/f ∈ [0, 1]`. The axis carries no condition for `m = 0` and a
/// Dirichlet condition otherwise.
pub fn solve_axisym_tube(
    f: &Profile,
    eps: f64,
    m: u32,
    base: BaseInterval,
    nx: usize,
    nr: usize,
    count: usize,
) -> Result<FullSpectrum> {
    check_eps(eps)?;
    if nx < 4 || nr < 4 {
        return Err(WaveguideError::InvalidInput("tube grid needs nx, nr >= 4".into()));
    }
    check_profile(f, base, nx, eps)?;
    let e2 = eps * eps;
    let m2 = f64::from(m * m);
    let coeffs = |x: f64, s: f64| -> Coeffs {
        let (fv, fp) = (f.value(x), f.d1(x));
        [
            e2 * s * fv * fv,
            -e2 * s * s * fv * fp,
            e2 * s.powi(3) * fp * fp + s,
            m2 / s,
            s * fv * fv,
        ]
    };
    let problem = MappedProblem {
        base,
        nx,
        s0: 0.0,
        s1: 1.0,
        ns: nr,
        dirichlet_s0: m > 0,
        s_rule: Rule::Gauss,
        coeffs: &coeffs,
    };
    solve(&problem, FullKind::AxisymTube { m }, eps, count)
}
