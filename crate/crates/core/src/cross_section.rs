//! Fibre eigenproblem: ground state of the Dirichlet Laplacian on a cross-section
//! and the functionals of it that enter the effective potentials.

use std::collections::VecDeque;

use crate::error::{Result, WaveguideError};
use crate::linalg::{inverse_power, Csr, InversePowerOptions};
use crate::polar::PolarGrid;

#[derive(Debug, Clone, PartialEq)]
pub enum CrossSectionShape {
    Interval { halfwidth: f64, center: f64 },
    Disc { radius: f64, center: [f64; 2] },
    /// Semi-axes `a`, `b`, rotated by `angle` about `center`.
    Ellipse { a: f64, b: f64, angle: f64, center: [f64; 2] },
    /// `grid[r][c]` marks interior nodes; node `(r, c)` sits at
    /// `center + ((c − (cols−1)/2) h, ((rows−1)/2 − r) h)`. Every node outside
    /// the array is Dirichlet.
    Mask { grid: Vec<Vec<bool>>, spacing: f64, center: [f64; 2] },
}

impl CrossSectionShape {
    pub fn interval(halfwidth: f64) -> Self {
        Self::Interval { halfwidth, center: 0.0 }
    }

    pub fn disc(radius: f64) -> Self {
        Self::Disc { radius, center: [0.0, 0.0] }
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::Ellipse { a, b, angle: 0.0, center: [0.0, 0.0] }
    }

    /// Square `[−side/2, side/2]²` as a mask with `n × n` interior nodes.
    pub fn square_mask(side: f64, n: usize) -> Self {
        Self::Mask {
            grid: vec![vec![true; n]; n],
            spacing: side / (n + 1) as f64,
            center: [0.0, 0.0],
        }
    }

    /// Rasterizes `inside(n₁, n₂)` on an `n × n` node grid of the given spacing.
    pub fn mask_from_fn(n: usize, spacing: f64, inside: impl Fn(f64, f64) -> bool) -> Self {
        let mid = (n as f64 - 1.0) / 2.0;
        let grid = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| inside((c as f64 - mid) * spacing, (mid - r as f64) * spacing))
                    .collect()
            })
            .collect();
        Self::Mask { grid, spacing, center: [0.0, 0.0] }
    }

    /// Fibre dimension `k`.
    pub fn codim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WaveguideError::InvalidInput(m));
        match self {
            Self::Interval { halfwidth, center } => {
                if !(*halfwidth > 0.0) || !center.is_finite() {
                    return bad(format!("interval halfwidth must be positive, got {halfwidth}"));
                }
            }
            Self::Disc { radius, .. } => {
                if !(*radius > 0.0) {
                    return bad(format!("disc radius must be positive, got {radius}"));
                }
            }
            Self::Ellipse { a, b, angle, .. } => {
                if !(*a > 0.0 && *b > 0.0) || !angle.is_finite() {
                    return bad(format!("ellipse semi-axes must be positive, got {a}, {b}"));
                }
            }
            Self::Mask { grid, spacing, .. } => {
                if !(*spacing > 0.0) {
                    return bad("mask spacing must be positive".into());
                }
                let cols = grid.first().map_or(0, |r| r.len());
                if grid.is_empty() || cols == 0 || grid.iter().any(|r| r.len() != cols) {
                    return bad("mask must be a non-empty rectangular grid".into());
                }
                if !mask_connected(grid) {
                    return bad("mask interior must be non-empty and 4-connected".into());
                }
            }
        }
        Ok(())
    }

    /// Length of the boundary `|∂F|` (two points count as 2 for an interval).
    pub fn perimeter(&self) -> Result<f64> {
        match self {
            Self::Interval { .. } => Ok(2.0),
            Self::Disc { radius, .. } => Ok(2.0 * std::f64::consts::PI * radius),
            Self::Ellipse { a, b, .. } => {
                // periodic trapezoid rule converges geometrically
                let n = 2000;
                let h = 2.0 * std::f64::consts::PI / n as f64;
                Ok((0..n)
                    .map(|i| {
                        let t = i as f64 * h;
                        (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt()
                    })
                    .sum::<f64>()
                    * h)
            }
            Self::Mask { .. } => Err(WaveguideError::InvalidInput(
                "perimeter of a staircase mask is not a meaningful hollow fibre".into(),
            )),
        }
    }
}

fn mask_connected(grid: &[Vec<bool>]) -> bool {
    let rows = grid.len();
    let cols = grid[0].len();
    let total = grid.iter().flatten().filter(|v| **v).count();
    let Some(start) = (0..rows * cols).find(|&p| grid[p / cols][p % cols]) else {
        return false;
    };
    let mut seen = vec![false; rows * cols];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 0;
    while let Some(p) = queue.pop_front() {
        count += 1;
        let (r, c) = (p / cols, p % cols);
        let mut push = |r: usize, c: usize| {
            let q = r * cols + c;
            if grid[r][c] && !seen[q] {
                seen[q] = true;
                queue.push_back(q);
            }
        };
        if r > 0 {
            push(r - 1, c);
        }
        if r + 1 < rows {
            push(r + 1, c);
        }
        if c > 0 {
            push(r, c - 1);
        }
        if c + 1 < cols {
            push(r, c + 1);
        }
    }
    count == total
}

/// Ground eigenpair of a cross-section with the derived functionals.
///
/// `phi0` holds nodal values; `points`, `weights` and `grad` give the
/// quadrature representation used by every functional:
/// `∫ g(ν) dν ≈ Σ weights[i] g(points[i])`.
#[derive(Debug, Clone)]
pub struct ModeData {
    pub shape: CrossSectionShape,
    pub lambda0: f64,
    pub phi0: Vec<f64>,
    pub spacing: f64,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
    /// `‖LΦ₀‖²` with `L = n¹∂₂ − n²∂₁` about the origin; zero for intervals.
    pub l_norm_sq: f64,
    /// `∫ ν |Φ₀|²`.
    pub com: [f64; 2],
    pub volume: f64,
    /// `C_F = ∫ |(k/2)Φ₀ + ν·∇Φ₀|²`.
    pub c_f: f64,
    /// `⟨SΦ₀, LΦ₀⟩` with `S = k/2 + ν·∇`.
    pub s_l_cross: f64,
    /// `∫ ν Φ₀ SΦ₀`.
    pub moment_a: [f64; 2],
    /// `∫ ν (SΦ₀)²`.
    pub moment_b: [f64; 2],
    /// `‖(−Δ_h − λ₀)φ₀‖ / (λ₀ ‖φ₀‖)` in the discrete mass norm.
    pub residual: f64,
    pub iterations: usize,
}

impl ModeData {
    pub fn codim(&self) -> usize {
        self.shape.codim()
    }

    /// `∫ g(ν) |Φ₀(ν)|² dν`.
    pub fn integrate_density(&self, g: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .zip(&self.phi0)
            .map(|((p, w), v)| w * v * v * g(*p))
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.integrate_density(|_| 1.0)
    }

    /// `LΦ₀` at the quadrature points.
    pub fn l_phi(&self) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.grad)
            .map(|(p, g)| p[0] * g[1] - p[1] * g[0])
            .collect()
    }

    /// `SΦ₀ = (k/2)Φ₀ + ν·∇Φ₀` at the quadrature points.
    pub fn s_phi(&self) -> Vec<f64> {
        let half_k = 0.5 * self.codim() as f64;
        self.points
            .iter()
            .zip(&self.grad)
            .zip(&self.phi0)
            .map(|((p, g), v)| half_k * v + p[0] * g[0] + p[1] * g[1])
            .collect()
    }

    fn finish(mut self) -> Self {
        // normalise in the quadrature inner product
        let nrm = self.norm_sq().sqrt();
        self.phi0.iter_mut().for_each(|v| *v /= nrm);
        self.grad.iter_mut().for_each(|g| {
            g[0] /= nrm;
            g[1] /= nrm;
        });
        let w = &self.weights;
        let l = self.l_phi();
        let s = self.s_phi();
        let sum = |f: &dyn Fn(usize) -> f64| -> f64 { (0..w.len()).map(|i| w[i] * f(i)).sum() };
        self.l_norm_sq = if self.codim() == 2 { sum(&|i| l[i] * l[i]) } else { 0.0 };
        self.com = [
            sum(&|i| self.points[i][0] * self.phi0[i].powi(2)),
            sum(&|i| self.points[i][1] * self.phi0[i].powi(2)),
        ];
        self.c_f = sum(&|i| s[i] * s[i]);
        self.s_l_cross = if self.codim() == 2 { sum(&|i| s[i] * l[i]) } else { 0.0 };
        self.moment_a = [
            sum(&|i| self.points[i][0] * self.phi0[i] * s[i]),
            sum(&|i| self.points[i][1] * self.phi0[i] * s[i]),
        ];
        self.moment_b = [
            sum(&|i| self.points[i][0] * s[i] * s[i]),
            sum(&|i| self.points[i][1] * s[i] * s[i]),
        ];
        self
    }
}

fn eigen_opts() -> InversePowerOptions {
    InversePowerOptions {
        tol: 1e-12,
        max_outer: 500,
        cg_tol: 1e-10,
        cg_max: 50_000,
        ..Default::default()
    }
}

fn relative_residual(k: &Csr<f64>, mass: &[f64], u: &[f64], lambda: f64) -> f64 {
    let ku = k.matvec(u);
    let num: f64 = ku
        .iter()
        .zip(u)
        .zip(mass)
        .map(|((a, b), m)| (a / m - lambda * b).powi(2) * m)
        .sum();
    let den: f64 = u.iter().zip(mass).map(|(b, m)| b * b * m).sum();
    num.sqrt() / (lambda.abs() * den.sqrt())
}

/// Solves the fibre problem. Intervals use a uniform 1D grid with `n_grid`
/// cells; discs and ellipses an elliptic-polar grid with `n_grid/2` radial and
/// `n_grid` angular nodes; masks their own 5-point grid (`n_grid` unused).
pub fn solve_ground_mode(shape: &CrossSectionShape, n_grid: usize) -> Result<ModeData> {
    shape.validate()?;
    if n_grid < 32 && !matches!(shape, CrossSectionShape::Mask { .. }) {
        return Err(WaveguideError::InvalidInput(format!("n_grid must be >= 32, got {n_grid}")));
    }
    match shape {
        CrossSectionShape::Interval { halfwidth, center } => solve_interval(shape, *halfwidth, *center, n_grid),
        CrossSectionShape::Disc { radius, center } => solve_polar(shape, *radius, *radius, 0.0, *center, n_grid),
        CrossSectionShape::Ellipse { a, b, angle, center } => solve_polar(shape, *a, *b, *angle, *center, n_grid),
        CrossSectionShape::Mask { grid, spacing, center } => solve_mask(shape, grid, *spacing, *center),
    }
}

/// Closed-form ground mode of the centred interval `[−hw, hw]`:
/// `Φ₀ = cos(πt/2hw)/√hw`, `λ₀ = π²/4hw²`, `C_F = π²/12 + ¼`. The nodal
/// representation on `n` cells is kept for quadratures.
pub fn interval_mode_exact(halfwidth: f64, n: usize) -> Result<ModeData> {
    let shape = CrossSectionShape::interval(halfwidth);
    shape.validate()?;
    if n < 2 {
        return Err(WaveguideError::InvalidInput("interval mode needs at least 2 cells".into()));
    }
    let hw = halfwidth;
    let h = 2.0 * hw / n as f64;
    let q = std::f64::consts::FRAC_PI_2 / hw;
    let amp = 1.0 / hw.sqrt();
    let points: Vec<[f64; 2]> = (0..=n).map(|i| [-hw + h * i as f64, 0.0]).collect();
    let phi0 = points.iter().map(|p| amp * (q * p[0]).cos()).collect();
    let grad = points.iter().map(|p| [-amp * q * (q * p[0]).sin(), 0.0]).collect();
    let mut weights = vec![h; n + 1];
    weights[0] = 0.5 * h;
    weights[n] = 0.5 * h;
    let pi2 = std::f64::consts::PI.powi(2);
    Ok(ModeData {
        shape,
        lambda0: q * q,
        phi0,
        spacing: h,
        points,
        weights,
        grad,
        l_norm_sq: 0.0,
        com: [0.0; 2],
        volume: 2.0 * hw,
        c_f: pi2 / 12.0 + 0.25,
        s_l_cross: 0.0,
        moment_a: [0.0; 2],
        moment_b: [0.0; 2],
        residual: 0.0,
        iterations: 0,
    })
}

fn solve_interval(shape: &CrossSectionShape, hw: f64, center: f64, n: usize) -> Result<ModeData> {
    let h = 2.0 * hw / n as f64;
    let m = n - 1;
    let mut t = Vec::with_capacity(3 * m);
    for i in 0..m {
        t.push((i, i, 2.0 / h));
        if i + 1 < m {
            t.push((i, i + 1, -1.0 / h));
            t.push((i + 1, i, -1.0 / h));
        }
    }
    let k = Csr::from_triplets(m, t)?;
    let mass = vec![h; m];
    let gs = inverse_power(&k, &mass, &eigen_opts())?;
    let residual = relative_residual(&k, &mass, &gs.vector, gs.value);
    let u = gs.vector;
    // trapezoidal rule over all n + 1 nodes, including the Dirichlet ends
    let val = |i: isize| if i <= 0 || i >= n as isize { 0.0 } else { u[i as usize - 1] };
    let points: Vec<[f64; 2]> = (0..=n).map(|i| [center - hw + h * i as f64, 0.0]).collect();
    let mut weights = vec![h; n + 1];
    weights[0] = 0.5 * h;
    weights[n] = 0.5 * h;
    let grad = (0..=n as isize)
        .map(|i| {
            let d = if i == 0 {
                (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h)
            } else if i == n as isize {
                (3.0 * val(i) - 4.0 * val(i - 1) + val(i - 2)) / (2.0 * h)
            } else {
                (val(i + 1) - val(i - 1)) / (2.0 * h)
            };
            [d, 0.0]
        })
        .collect();
    let phi0 = (0..=n as isize).map(val).collect();
    Ok(ModeData {
        shape: shape.clone(),
        lambda0: gs.value,
        phi0,
        spacing: h,
        points,
        weights,
        grad,
        l_norm_sq: 0.0,
        com: [0.0; 2],
        volume: 2.0 * hw,
        c_f: 0.0,
        s_l_cross: 0.0,
        moment_a: [0.0; 2],
        moment_b: [0.0; 2],
        residual,
        iterations: gs.iterations,
    }
    .finish())
}

fn solve_polar(
    shape: &CrossSectionShape,
    a: f64,
    b: f64,
    angle: f64,
    center: [f64; 2],
    n_grid: usize,
) -> Result<ModeData> {
    let grid = PolarGrid::new(a, b, n_grid / 2, 2 * (n_grid / 2))?;
    let k = Csr::from_triplets(grid.len(), grid.stiffness_entries(1.0, 0))?;
    let mass = grid.mass();
    let gs = inverse_power(&k, &mass, &eigen_opts())?;
    let residual = relative_residual(&k, &mass, &gs.vector, gs.value);
    let (c, s) = (angle.cos(), angle.sin());
    let rot = |v: [f64; 2]| [c * v[0] - s * v[1], s * v[0] + c * v[1]];
    let place = |q: [f64; 2]| {
        let q = rot(q);
        [q[0] + center[0], q[1] + center[1]]
    };
    let mut points: Vec<[f64; 2]> = (0..grid.len())
        .map(|p| place(grid.position(p / grid.nt, p % grid.nt)))
        .collect();
    let mut grad: Vec<[f64; 2]> = grid.gradient(&gs.vector).into_iter().map(rot).collect();
    let (mut weights, wb) = grid.quadrature();
    let mut phi0 = gs.vector;
    for (k, g) in grid.boundary_gradient(&phi0).into_iter().enumerate() {
        let t = grid.theta(k);
        points.push(place([a * t.cos(), b * t.sin()]));
        grad.push(rot(g));
        weights.push(wb[k]);
    }
    phi0.extend(std::iter::repeat_n(0.0, grid.nt));
    Ok(ModeData {
        shape: shape.clone(),
        lambda0: gs.value,
        phi0,
        spacing: grid.hs * a.min(b),
        points,
        weights,
        grad,
        l_norm_sq: 0.0,
        com: [0.0; 2],
        volume: std::f64::consts::PI * a * b,
        c_f: 0.0,
        s_l_cross: 0.0,
        moment_a: [0.0; 2],
        moment_b: [0.0; 2],
        residual,
        iterations: gs.iterations,
    }
    .finish())
}

fn solve_mask(shape: &CrossSectionShape, grid: &[Vec<bool>], h: f64, center: [f64; 2]) -> Result<ModeData> {
    let rows = grid.len();
    let cols = grid[0].len();
    let mut id = vec![usize::MAX; rows * cols];
    let mut points = Vec::new();
    let (mr, mc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    for r in 0..rows {
        for c in 0..cols {
            if grid[r][c] {
                id[r * cols + c] = points.len();
                points.push([center[0] + (c as f64 - mc) * h, center[1] + (mr - r as f64) * h]);
            }
        }
    }
    let n = points.len();
    let at = |r: isize, c: isize| -> Option<usize> {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            return None;
        }
        let v = id[r as usize * cols + c as usize];
        (v != usize::MAX).then_some(v)
    };
    let mut t = Vec::with_capacity(5 * n);
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let Some(p) = at(r, c) else { continue };
            // 5-point stencil, scaled by h² mass: K = (4u − Σ neighbours)
            t.push((p, p, 4.0));
            for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if let Some(q) = at(r + dr, c + dc) {
                    t.push((p, q, -1.0));
                }
            }
        }
    }
    let k = Csr::from_triplets(n, t)?;
    let mass = vec![h * h; n];
    let gs = inverse_power(&k, &mass, &eigen_opts())?;
    let residual = relative_residual(&k, &mass, &gs.vector, gs.value);
    let u = &gs.vector;
    let mut grad = vec![[0.0; 2]; n];
    for r in 0..rows as isize {
        for c in 0..cols as isize {
            let Some(p) = at(r, c) else { continue };
            let v = |rr, cc| at(rr, cc).map_or(0.0, |q| u[q]);
            grad[p] = [
                (v(r, c + 1) - v(r, c - 1)) / (2.0 * h),
                (v(r - 1, c) - v(r + 1, c)) / (2.0 * h),
            ];
        }
    }
    Ok(ModeData {
        shape: shape.clone(),
        lambda0: gs.value,
        phi0: gs.vector,
        spacing: h,
        points,
        weights: mass,
        grad,
        l_norm_sq: 0.0,
        com: [0.0; 2],
        volume: n as f64 * h * h,
        c_f: 0.0,
        s_l_cross: 0.0,
        moment_a: [0.0; 2],
        moment_b: [0.0; 2],
        residual,
        iterations: gs.iterations,
    }
    .finish())
}

/// `‖LΦ₀‖²` for a two-dimensional mode.
pub fn angular_momentum_norm(mode: &ModeData) -> Result<f64> {
    if mode.codim() != 2 {
        return Err(WaveguideError::InvalidInput(
            "angular momentum needs a two-dimensional cross-section".into(),
        ));
    }
    Ok(mode.l_norm_sq)
}

pub fn center_of_mass(mode: &ModeData) -> [f64; 2] {
    mode.com
}

/// `λ₀(x) = λ₀(F) / f(x)²`.
pub fn lambda0_profile(mode: &ModeData, f: &[f64]) -> Result<Vec<f64>> {
    check_positive(f)?;
    Ok(f.iter().map(|v| mode.lambda0 / (v * v)).collect())
}

/// `V_a(x) = (f'/f)² C_F` for fibres `F_x = f(x) F`.
pub fn adiabatic_va_profile(mode: &ModeData, f: &[f64], f_prime: &[f64]) -> Result<Vec<f64>> {
    check_positive(f)?;
    if f.len() != f_prime.len() {
        return Err(WaveguideError::DimensionMismatch {
            expected: f.len(),
            got: f_prime.len(),
            context: "f'".into(),
        });
    }
    Ok(f.iter().zip(f_prime).map(|(v, d)| (d / v).powi(2) * mode.c_f).collect())
}

fn check_positive(f: &[f64]) -> Result<()> {
    if let Some(i) = f.iter().position(|v| !(*v > 0.0)) {
        return Err(WaveguideError::InvalidInput(format!("f must be positive (node {i})")));
    }
    Ok(())
}

/// Hollow fibre volume `|F_x| = |∂F| f(x)` and its log-derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberVolumeProfile {
    pub vol: Vec<f64>,
    pub dlog: Vec<f64>,
    pub d2log: Vec<f64>,
}

/// Log-derivatives by central differences on a grid of spacing `h`.
pub fn fiber_volume_profile(shape: &CrossSectionShape, f: &[f64], h: f64) -> Result<FiberVolumeProfile> {
    check_positive(f)?;
    let per = shape.perimeter()?;
    let vol: Vec<f64> = f.iter().map(|v| per * v).collect();
    let logv: Vec<f64> = vol.iter().map(|v| v.ln()).collect();
    let (dlog, d2log) = crate::geometry::central_derivatives(&logv, h);
    Ok(FiberVolumeProfile { vol, dlog, d2log })
}

impl FiberVolumeProfile {
    /// Exact log-derivatives from `(f, f', f'')`.
    pub fn from_derivatives(shape: &CrossSectionShape, f: &[f64], fp: &[f64], fpp: &[f64]) -> Result<Self> {
        check_positive(f)?;
        if fp.len() != f.len() || fpp.len() != f.len() {
            return Err(WaveguideError::DimensionMismatch {
                expected: f.len(),
                got: fp.len().min(fpp.len()),
                context: "profile derivatives".into(),
            });
        }
        let per = shape.perimeter()?;
        let vol = f.iter().map(|v| per * v).collect();
        let dlog = f.iter().zip(fp).map(|(v, d)| d / v).collect();
        let d2log = f
            .iter()
            .zip(fp)
            .zip(fpp)
            .map(|((v, d), dd)| dd / v - (d / v).powi(2))
            .collect();
        Ok(Self { vol, dlog, d2log })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_ground_state() {
        let m = solve_ground_mode(&CrossSectionShape::interval(1.0), 400).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 4.0;
        assert!((m.lambda0 - exact).abs() < 2e-3);
        assert!((m.norm_sq() - 1.0).abs() < 1e-8);
        assert!(m.phi0.iter().all(|v| *v >= 0.0));
        assert!(m.residual < 1e-8);
    }

    #[test]
    fn disconnected_mask_rejected() {
        let grid = vec![vec![true, false, true]];
        let s = CrossSectionShape::Mask { grid, spacing: 0.1, center: [0.0, 0.0] };
        assert!(s.validate().is_err());
    }

    #[test]
    fn small_grid_rejected() {
        assert!(solve_ground_mode(&CrossSectionShape::disc(1.0), 16).is_err());
    }

    #[test]
    fn volume_profile_log_derivatives() {
        let x: Vec<f64> = (0..=100).map(|i| -1.0 + 0.02 * i as f64).collect();
        let f: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let fv = fiber_volume_profile(&CrossSectionShape::disc(1.0), &f, 0.02).unwrap();
        assert!(fv.dlog.iter().all(|d| (d - 1.0).abs() < 1e-10));
        assert!(fv.d2log.iter().all(|d| d.abs() < 1e-8));
    }
}
