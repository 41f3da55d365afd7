//! Base curves, parallel (Bishop) frames, tube densities, pullback metrics and
//! closed-form bending potentials.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{Result, WaveguideError};
use crate::profile::Profile;
use crate::scalar::Real;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// Straight line along the first coordinate axis.
    Line,
    /// Planar circle of the given radius in the (1,2)-plane.
    Circle { radius: f64 },
    /// `t ↦ (a cos t, a sin t, b t)`.
    Helix { a: f64, b: f64 },
    /// Arbitrary samples; interpolated piecewise by quintics on reparametrization.
    Sampled { points: Vec<Vec3> },
}

/// A base curve on `[0, length]` with `samples` intervals (`samples + 1` nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub kind: CurveKind,
    pub length: f64,
    pub samples: usize,
    arclength: bool,
}

const MIN_SAMPLES: usize = 16;

impl CurveSpec {
    pub fn new(kind: CurveKind, length: f64, samples: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(WaveguideError::InvalidInput(format!("curve length must be positive, got {length}")));
        }
        if samples < MIN_SAMPLES {
            return Err(WaveguideError::InvalidInput(format!(
                "need at least {MIN_SAMPLES} samples, got {samples}"
            )));
        }
        match &kind {
            CurveKind::Circle { radius } if !(*radius > 0.0) => {
                return Err(WaveguideError::InvalidInput("circle radius must be positive".into()))
            }
            CurveKind::Helix { a, b } if !(*a > 0.0) || !b.is_finite() => {
                return Err(WaveguideError::InvalidInput("helix radius must be positive".into()))
            }
            CurveKind::Sampled { .. } => {
                return Err(WaveguideError::InvalidInput(
                    "use CurveSpec::sampled for sampled curves".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            kind,
            length,
            samples,
            arclength: true,
        })
    }

    pub fn line(length: f64, samples: usize) -> Result<Self> {
        Self::new(CurveKind::Line, length, samples)
    }

    pub fn circle(radius: f64, length: f64, samples: usize) -> Result<Self> {
        Self::new(CurveKind::Circle { radius }, length, samples)
    }

    pub fn helix(a: f64, b: f64, length: f64, samples: usize) -> Result<Self> {
        Self::new(CurveKind::Helix { a, b }, length, samples)
    }

    /// A curve given by arbitrary (not necessarily arclength) samples.
    /// The length is the polyline length until [`reparametrize_arclength`] is applied.
    pub fn sampled(points: Vec<Vec3>) -> Result<Self> {
        if points.len() < MIN_SAMPLES + 1 {
            return Err(WaveguideError::InvalidInput(format!(
                "need at least {} points, got {}",
                MIN_SAMPLES + 1,
                points.len()
            )));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(WaveguideError::InvalidInput("non-finite curve point".into()));
        }
        let length: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let samples = points.len() - 1;
        Ok(Self {
            kind: CurveKind::Sampled { points },
            length,
            samples,
            arclength: false,
        })
    }

    pub fn is_arclength(&self) -> bool {
        self.arclength
    }

    pub fn step(&self) -> f64 {
        self.length / self.samples as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        crate::profile::uniform_grid(0.0, self.length, self.samples)
    }

    /// `(c, c', c'')` for analytic kinds; `None` for sampled curves.
    fn analytic(&self, s: f64) -> Option<(Vec3, Vec3, Vec3)> {
        match self.kind {
            CurveKind::Line => Some((Vec3::new(s, 0.0, 0.0), Vec3::x(), Vec3::zeros())),
            CurveKind::Circle { radius: r } => {
                let t = s / r;
                Some((
                    Vec3::new(r * t.cos(), r * t.sin(), 0.0),
                    Vec3::new(-t.sin(), t.cos(), 0.0),
                    Vec3::new(-t.cos(), -t.sin(), 0.0) / r,
                ))
            }
            CurveKind::Helix { a, b } => {
                let c = (a * a + b * b).sqrt();
                let t = s / c;
                Some((
                    Vec3::new(a * t.cos(), a * t.sin(), b * t),
                    Vec3::new(-a * t.sin(), a * t.cos(), b) / c,
                    Vec3::new(-a * t.cos(), -a * t.sin(), 0.0) / (c * c),
                ))
            }
            CurveKind::Sampled { .. } => None,
        }
    }

    /// Curve points at the nodes.
    pub fn points(&self) -> Vec<Vec3> {
        match &self.kind {
            CurveKind::Sampled { points } => points.clone(),
            _ => self.nodes().iter().map(|&s| self.analytic(s).unwrap().0).collect(),
        }
    }

    /// `(c', c'')` at the nodes: exact for analytic kinds, fourth-order
    /// finite differences (one-sided at the ends) for sampled curves.
    pub fn derivatives(&self) -> (Vec<Vec3>, Vec<Vec3>) {
        match &self.kind {
            CurveKind::Sampled { points } => {
                let h = self.step();
                let d1 = (0..points.len()).map(|i| fd_first(points, i, h)).collect();
                let d2 = (0..points.len()).map(|i| fd_second(points, i, h)).collect();
                (d1, d2)
            }
            _ => self
                .nodes()
                .iter()
                .map(|&s| {
                    let (_, d1, d2) = self.analytic(s).unwrap();
                    (d1, d2)
                })
                .unzip(),
        }
    }
}

fn fd_first(p: &[Vec3], i: usize, h: f64) -> Vec3 {
    let n = p.len();
    if i >= 2 && i + 2 < n {
        (p[i - 2] - p[i - 1] * 8.0 + p[i + 1] * 8.0 - p[i + 2]) / (12.0 * h)
    } else if i == 0 {
        (p[0] * -25.0 + p[1] * 48.0 - p[2] * 36.0 + p[3] * 16.0 - p[4] * 3.0) / (12.0 * h)
    } else if i == 1 {
        (p[0] * -3.0 - p[1] * 10.0 + p[2] * 18.0 - p[3] * 6.0 + p[4]) / (12.0 * h)
    } else if i + 2 == n {
        let q = &p[n - 5..n];
        (q[4] * 3.0 + q[3] * 10.0 - q[2] * 18.0 + q[1] * 6.0 - q[0]) / (12.0 * h)
    } else {
        let q = &p[n - 5..n];
        (q[4] * 25.0 - q[3] * 48.0 + q[2] * 36.0 - q[1] * 16.0 + q[0] * 3.0) / (12.0 * h)
    }
}

fn fd_second(p: &[Vec3], i: usize, h: f64) -> Vec3 {
    let n = p.len();
    let h2 = h * h;
    if i >= 2 && i + 2 < n {
        (-p[i - 2] + p[i - 1] * 16.0 - p[i] * 30.0 + p[i + 1] * 16.0 - p[i + 2]) / (12.0 * h2)
    } else if i == 0 {
        let q = &p[0..6];
        (q[0] * 45.0 - q[1] * 154.0 + q[2] * 214.0 - q[3] * 156.0 + q[4] * 61.0 - q[5] * 10.0) / (12.0 * h2)
    } else if i == 1 {
        let q = &p[0..6];
        (q[0] * 10.0 - q[1] * 15.0 - q[2] * 4.0 + q[3] * 14.0 - q[4] * 6.0 + q[5]) / (12.0 * h2)
    } else if i + 2 == n {
        let q = &p[n - 6..n];
        (q[5] * 10.0 - q[4] * 15.0 - q[3] * 4.0 + q[2] * 14.0 - q[1] * 6.0 + q[0]) / (12.0 * h2)
    } else {
        let q = &p[n - 6..n];
        (q[5] * 45.0 - q[4] * 154.0 + q[3] * 214.0 - q[2] * 156.0 + q[1] * 61.0 - q[0] * 10.0) / (12.0 * h2)
    }
}

/// Piecewise quintic Lagrange interpolation of one coordinate: on segment
/// `[t_k, t_{k+1}]` the six nearest samples define the interpolant.
struct LocalQuintic<'a> {
    t: &'a [f64],
    y: Vec<f64>,
}

impl LocalQuintic<'_> {
    fn eval(&self, k: usize, t: f64) -> (f64, f64) {
        let n = self.t.len();
        let width = 6.min(n);
        let s = k.saturating_sub(2).min(n - width);
        let nodes = &self.t[s..s + width];
        let mut v = 0.0;
        let mut d = 0.0;
        for j in 0..width {
            let mut w = 1.0;
            let mut dw = 0.0;
            for m in 0..width {
                if m == j {
                    continue;
                }
                let den = nodes[j] - nodes[m];
                dw = dw * (t - nodes[m]) / den + w / den;
                w *= (t - nodes[m]) / den;
            }
            v += w * self.y[s + j];
            d += dw * self.y[s + j];
        }
        (v, d)
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Resamples a curve at equispaced arclength. Analytic kinds are already in
/// arclength and are returned unchanged.
pub fn reparametrize_arclength(curve: &CurveSpec) -> Result<CurveSpec> {
    let points = match &curve.kind {
        CurveKind::Sampled { points } if !curve.arclength => points,
        _ => return Ok(curve.clone()),
    };
    let n = points.len();
    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1.0);
    let mut t = vec![0.0; n];
    for i in 1..n {
        let d = (points[i] - points[i - 1]).norm();
        if d <= 1e-12 * scale {
            return Err(WaveguideError::DegenerateCurve(format!(
                "repeated point at sample {i}"
            )));
        }
        t[i] = t[i - 1] + d;
    }
    let interp: Vec<LocalQuintic> = (0..3)
        .map(|c| LocalQuintic {
            t: &t,
            y: points.iter().map(|p| p[c]).collect(),
        })
        .collect();
    let speed = |k: usize, tt: f64| -> f64 {
        let d = Vec3::new(interp[0].eval(k, tt).1, interp[1].eval(k, tt).1, interp[2].eval(k, tt).1);
        d.norm()
    };
    // composite rule: 4 sub-panels of 5-point Gauss–Legendre
    let arc = |k: usize, t0: f64, t1: f64| -> f64 {
        let mut s = 0.0;
        for p in 0..4 {
            let a = t0 + (t1 - t0) * p as f64 / 4.0;
            let b = t0 + (t1 - t0) * (p + 1) as f64 / 4.0;
            let (m, hw) = (0.5 * (a + b), 0.5 * (b - a));
            s += GAUSS5.iter().map(|(x, w)| w * speed(k, m + hw * x)).sum::<f64>() * hw;
        }
        s
    };
    let mut cum = vec![0.0; n];
    for k in 0..n - 1 {
        let seg = arc(k, t[k], t[k + 1]);
        if !(seg > 0.0) {
            return Err(WaveguideError::DegenerateCurve(format!("zero speed in segment {k}")));
        }
        cum[k + 1] = cum[k] + seg;
    }
    let length = cum[n - 1];
    let samples = n - 1;
    let h = length / samples as f64;
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..=samples {
        let target = if i == samples { length } else { h * i as f64 };
        while k + 2 < n && cum[k + 1] < target {
            k += 1;
        }
        let want = target - cum[k];
        let (mut lo, mut hi) = (t[k], t[k + 1]);
        let mut tt = lo + (hi - lo) * (want / (cum[k + 1] - cum[k])).clamp(0.0, 1.0);
        for _ in 0..60 {
            let g = arc(k, t[k], tt) - want;
            if g.abs() <= 1e-15 * length.max(1.0) {
                break;
            }
            if g > 0.0 {
                hi = tt;
            } else {
                lo = tt;
            }
            let mut next = tt - g / speed(k, tt);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            tt = next;
        }
        out.push(Vec3::new(interp[0].eval(k, tt).0, interp[1].eval(k, tt).0, interp[2].eval(k, tt).0));
    }
    Ok(CurveSpec {
        kind: CurveKind::Sampled { points: out },
        length,
        samples,
        arclength: true,
    })
}

/// Parallel adapted frame `(τ, e₁, e₂)` sampled on the curve nodes, with the
/// curvature components `κ^α = ⟨c'', e_α⟩`.
#[derive(Debug, Clone)]
pub struct ParallelFrame {
    pub x: Vec<f64>,
    pub tau: Vec<Vec3>,
    pub e1: Vec<Vec3>,
    pub e2: Vec<Vec3>,
    pub kappa: Vec<[f64; 2]>,
    /// `c''` at the nodes.
    pub accel: Vec<Vec3>,
    pub h: f64,
}

/// A unit vector orthogonal to `tau`, built from the coordinate axis least aligned with it.
pub fn default_normal(tau: &Vec3) -> Vec3 {
    let axes = [Vec3::x(), Vec3::y(), Vec3::z()];
    let axis = axes
        .iter()
        .min_by(|a, b| a.dot(tau).abs().total_cmp(&b.dot(tau).abs()))
        .unwrap();
    let t = tau.normalize();
    (axis - t * axis.dot(&t)).normalize()
}

fn cubic_midpoint(v: &[Vec3], i: usize) -> Vec3 {
    let n = v.len();
    if n < 4 {
        return (v[i] + v[i + 1]) * 0.5;
    }
    // four-point Lagrange interpolation at the midpoint of [i, i+1]
    let s = i.saturating_sub(1).min(n - 4);
    let u = i as f64 + 0.5 - s as f64;
    let w: Vec<f64> = (0..4)
        .map(|j| {
            (0..4)
                .filter(|&m| m != j)
                .map(|m| (u - m as f64) / (j as f64 - m as f64))
                .product()
        })
        .collect();
    (0..4).fold(Vec3::zeros(), |acc, j| acc + v[s + j] * w[j])
}

fn reorthonormalize(tau: &Vec3, e1: &mut Vec3, e2: &mut Vec3) {
    let t = tau.normalize();
    let a = *e1 - t * e1.dot(&t);
    let b = *e2 - t * e2.dot(&t);
    // symmetric orthonormalization of the normal pair: E ← E (EᵀE)^{-1/2}
    let g = Matrix2::new(a.dot(&a), a.dot(&b), a.dot(&b), b.dot(&b));
    let eig = g.symmetric_eigen();
    let inv_sqrt = eig.eigenvectors
        * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    *e1 = a * inv_sqrt[(0, 0)] + b * inv_sqrt[(1, 0)];
    *e2 = a * inv_sqrt[(0, 1)] + b * inv_sqrt[(1, 1)];
}

/// Principal normal at the start of the curve, or [`default_normal`] when the
/// curve starts straight. A convenient `e1_init` for [`integrate_parallel_frame`].
pub fn initial_normal(curve: &CurveSpec) -> Result<Vec3> {
    let curve = reparametrize_arclength(curve)?;
    let (d1, d2) = curve.derivatives();
    let t = d1[0].normalize();
    let a = d2[0] - t * t.dot(&d2[0]);
    Ok(if a.norm() > 1e-9 { a.normalize() } else { default_normal(&t) })
}

/// Integrates `e_α' = −⟨c'', e_α⟩ τ` with the classical fourth-order Runge–Kutta
/// method and re-orthonormalizes after every step.
pub fn integrate_parallel_frame(curve: &CurveSpec, e1_init: Vec3) -> Result<ParallelFrame> {
    let curve = reparametrize_arclength(curve)?;
    let (d1, d2) = curve.derivatives();
    let tau: Vec<Vec3> = d1.iter().map(|t| t.normalize()).collect();
    let x = curve.nodes();
    let h = curve.step();
    if (e1_init.norm() - 1.0).abs() > 1e-10 {
        return Err(WaveguideError::InvalidInput("e1_init must be a unit vector".into()));
    }
    if e1_init.dot(&tau[0]).abs() > 1e-10 {
        return Err(WaveguideError::InvalidInput(format!(
            "e1_init not orthogonal to the tangent (dot = {:e})",
            e1_init.dot(&tau[0])
        )));
    }
    let n = x.len();
    let analytic = !matches!(curve.kind, CurveKind::Sampled { .. });
    let mid = |i: usize| -> (Vec3, Vec3) {
        if analytic {
            let (_, t, a) = curve.analytic(x[i] + 0.5 * h).unwrap();
            (t, a)
        } else {
            (cubic_midpoint(&tau, i).normalize(), cubic_midpoint(&d2, i))
        }
    };
    let rhs = |t: &Vec3, a: &Vec3, e: &Vec3| -> Vec3 { -t * a.dot(e) };
    let mut e1 = vec![Vec3::zeros(); n];
    let mut e2 = vec![Vec3::zeros(); n];
    e1[0] = e1_init;
    e2[0] = tau[0].cross(&e1_init);
    for i in 0..n - 1 {
        let (tm, am) = mid(i);
        let (t0, a0) = (tau[i], d2[i]);
        let (t1, a1) = (tau[i + 1], d2[i + 1]);
        let step = |e: Vec3| -> Vec3 {
            let k1 = rhs(&t0, &a0, &e);
            let k2 = rhs(&tm, &am, &(e + k1 * (0.5 * h)));
            let k3 = rhs(&tm, &am, &(e + k2 * (0.5 * h)));
            let k4 = rhs(&t1, &a1, &(e + k3 * h));
            e + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
        };
        let mut a = step(e1[i]);
        let mut b = step(e2[i]);
        reorthonormalize(&tau[i + 1], &mut a, &mut b);
        e1[i + 1] = a;
        e2[i + 1] = b;
    }
    let kappa = (0..n).map(|i| [d2[i].dot(&e1[i]), d2[i].dot(&e2[i])]).collect();
    Ok(ParallelFrame {
        x,
        tau,
        e1,
        e2,
        kappa,
        accel: d2,
        h,
    })
}

impl ParallelFrame {
    /// Frame of a straight segment on the given (equispaced) grid.
    pub fn straight(x: Vec<f64>) -> Result<Self> {
        if x.len() < 3 {
            return Err(WaveguideError::InvalidInput("need at least 3 nodes".into()));
        }
        let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        if !(h > 0.0) {
            return Err(WaveguideError::InvalidInput("grid must be increasing".into()));
        }
        let n = x.len();
        Ok(Self {
            x,
            tau: vec![Vec3::x(); n],
            e1: vec![Vec3::y(); n],
            e2: vec![Vec3::z(); n],
            kappa: vec![[0.0, 0.0]; n],
            accel: vec![Vec3::zeros(); n],
            h,
        })
    }

    /// Shifts the arclength coordinate so that the first node sits at `x0`.
    pub fn with_origin(mut self, x0: f64) -> Self {
        let d = x0 - self.x[0];
        self.x.iter_mut().for_each(|v| *v += d);
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Largest deviation of the Gram matrix of `(τ, e₁, e₂)` from the identity.
    pub fn gram_deviation(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let m = Matrix3::from_columns(&[self.tau[i], self.e1[i], self.e2[i]]);
                (m.transpose() * m - Matrix3::identity()).abs().max()
            })
            .fold(0.0, f64::max)
    }

    /// `(κ', κ'')` by second-order central differences (one-sided at the ends).
    pub fn kappa_derivatives(&self) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        let comp = |a: usize| -> Vec<f64> { self.kappa.iter().map(|k| k[a]).collect() };
        let (k1, k2) = (comp(0), comp(1));
        let (d1a, d2a) = central_derivatives(&k1, self.h);
        let (d1b, d2b) = central_derivatives(&k2, self.h);
        (
            d1a.iter().zip(&d1b).map(|(a, b)| [*a, *b]).collect(),
            d2a.iter().zip(&d2b).map(|(a, b)| [*a, *b]).collect(),
        )
    }
}

/// First and second derivatives of equispaced samples, second order throughout.
pub fn central_derivatives(v: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    if n < 4 {
        return (d1, d2);
    }
    for i in 1..n - 1 {
        d1[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
        d2[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
    }
    d1[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d1[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h);
    d2[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / (h * h);
    (d1, d2)
}

fn self_intersection(eps: f64, x: f64, rho: f64) -> WaveguideError {
    WaveguideError::SelfIntersection { eps, x, rho }
}

/// `ρ_ε = 1 − ε n·κ(x_i)`.
pub fn density_rho(frame: &ParallelFrame, eps: f64, i: usize, n: [f64; 2]) -> Result<f64> {
    if eps < 0.0 {
        return Err(WaveguideError::InvalidInput("eps must be non-negative".into()));
    }
    let k = frame.kappa[i];
    let rho = 1.0 - eps * (n[0] * k[0] + n[1] * k[1]);
    if rho <= 0.0 {
        return Err(self_intersection(eps, frame.x[i], rho));
    }
    Ok(rho)
}

/// `Π_i (1 − ε κ_i)` over the principal curvatures of `W(ν)`.
pub fn density_rho_general<T: Real>(spectrum: &[T], eps: T) -> Result<T> {
    if eps < T::zero() {
        return Err(WaveguideError::InvalidInput("eps must be non-negative".into()));
    }
    let rho = spectrum.iter().fold(T::one(), |acc, k| acc * (T::one() - eps * *k));
    if rho <= T::zero() {
        return Err(self_intersection(
            eps.to_f64().unwrap_or(f64::NAN),
            f64::NAN,
            rho.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(rho)
}

/// Rotation angle `ω(x)` of the fibre relative to the parallel frame, and its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistProfile {
    pub omega: Vec<f64>,
    pub omega_prime: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwistSpec {
    None,
    /// `ω' ≡ rate`.
    Linear { rate: f64 },
    /// `ω' = rate · ½[tanh((x−start)/width) − tanh((x−end)/width)]`.
    Window { rate: f64, start: f64, end: f64, width: f64 },
}

fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl TwistSpec {
    pub fn omega_prime(&self, x: f64) -> f64 {
        match *self {
            TwistSpec::None => 0.0,
            TwistSpec::Linear { rate } => rate,
            TwistSpec::Window { rate, start, end, width } => {
                0.5 * rate * (((x - start) / width).tanh() - ((x - end) / width).tanh())
            }
        }
    }

    pub fn omega(&self, x: f64) -> f64 {
        match *self {
            TwistSpec::None => 0.0,
            TwistSpec::Linear { rate } => rate * x,
            TwistSpec::Window { rate, start, end, width } => {
                0.5 * rate * width * (log_cosh((x - start) / width) - log_cosh((x - end) / width))
            }
        }
    }

    pub fn sample(&self, x: &[f64]) -> TwistProfile {
        TwistProfile {
            omega: x.iter().map(|&t| self.omega(t)).collect(),
            omega_prime: x.iter().map(|&t| self.omega_prime(t)).collect(),
        }
    }
}

impl TwistProfile {
    pub fn zero(n: usize) -> Self {
        Self {
            omega: vec![0.0; n],
            omega_prime: vec![0.0; n],
        }
    }

    /// Builds the profile from samples of `ω` on an equispaced grid; `ω'` by central differences.
    pub fn from_samples(omega: Vec<f64>, h: f64) -> Result<Self> {
        if omega.len() < 4 {
            return Err(WaveguideError::InvalidInput("need at least 4 twist samples".into()));
        }
        let (d1, _) = central_derivatives(&omega, h);
        Ok(Self {
            omega,
            omega_prime: d1,
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Scaled pullback metric in bundle coordinates `(x, n¹, n²)`:
/// `g_xx = ε⁻²ρ² + ω'²|n|²`, `g_{x n^α} = ω'(Tn)_α`, `g_{n n} = I`, with
/// `Tn = (−n², n¹)` and `ρ = 1 − ε ν·κ`, `ν = R(ω) n`.
pub fn pullback_metric_d1(
    frame: &ParallelFrame,
    eps: f64,
    i: usize,
    n: [f64; 2],
    twist: Option<&TwistProfile>,
) -> Result<Matrix3<f64>> {
    if !(eps > 0.0) {
        return Err(WaveguideError::InvalidInput("eps must be positive".into()));
    }
    let (w, wp) = twist.map_or((0.0, 0.0), |t| (t.omega[i], t.omega_prime[i]));
    let (c, s) = (w.cos(), w.sin());
    let nu = [c * n[0] - s * n[1], s * n[0] + c * n[1]];
    let rho = density_rho(frame, eps, i, nu)?;
    let tn = [-n[1], n[0]];
    let gxx = rho * rho / (eps * eps) + wp * wp * (n[0] * n[0] + n[1] * n[1]);
    Ok(Matrix3::new(
        gxx,
        wp * tn[0],
        wp * tn[1],
        wp * tn[0],
        1.0,
        0.0,
        wp * tn[1],
        0.0,
        1.0,
    ))
}

/// Principal curvatures `κ_i^α` of a `d`-dimensional base in codimension `k`:
/// `kappas[i][α]` is the `i`-th eigenvalue of `W(e_α)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalCurvatureSet<T> {
    pub d: usize,
    pub k: usize,
    pub kappas: Vec<Vec<T>>,
}

impl<T: Real> PrincipalCurvatureSet<T> {
    pub fn new(kappas: Vec<Vec<T>>) -> Result<Self> {
        let d = kappas.len();
        if d == 0 {
            return Err(WaveguideError::InvalidInput("need d >= 1".into()));
        }
        let k = kappas[0].len();
        if k == 0 {
            return Err(WaveguideError::InvalidInput("need k >= 1".into()));
        }
        for row in &kappas {
            if row.len() != k {
                return Err(WaveguideError::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                    context: "principal curvature row".into(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(WaveguideError::InvalidInput("non-finite curvature".into()));
            }
        }
        Ok(Self { d, k, kappas })
    }

    /// Principal curvatures of `W(ν)` for a normal vector `ν` (components in the `e_α` basis).
    pub fn spectrum_along(&self, nu: &[T]) -> Result<Vec<T>> {
        if nu.len() != self.k {
            return Err(WaveguideError::DimensionMismatch {
                expected: self.k,
                got: nu.len(),
                context: "normal direction".into(),
            });
        }
        Ok(self
            .kappas
            .iter()
            .map(|row| row.iter().zip(nu).map(|(a, b)| *a * *b).sum())
            .collect())
    }

    /// `¼ Σ_α [(Σ_i κ_i^α)² − 2 Σ_i (κ_i^α)²]`.
    pub fn vbend0(&self) -> T {
        let quarter = T::lit(0.25);
        (0..self.k)
            .map(|a| {
                let tr: T = self.kappas.iter().map(|r| r[a]).sum();
                let sq: T = self.kappas.iter().map(|r| r[a] * r[a]).sum();
                tr * tr - T::lit(2.0) * sq
            })
            .sum::<T>()
            * quarter
    }
}

pub fn vbend0_from_principal_curvatures<T: Real>(pcs: &PrincipalCurvatureSet<T>) -> T {
    pcs.vbend0()
}

/// `(1 − 2/d) d² / (4R²)` for the round sphere of radius `R` in dimension `d`.
pub fn sphere_vbend0<T: Real>(d: usize, radius: T) -> Result<T> {
    if d == 0 || !(radius > T::zero()) {
        return Err(WaveguideError::InvalidInput("need d >= 1 and R > 0".into()));
    }
    let dd = T::from_usize_lossy(d);
    Ok((T::one() - T::lit(2.0) / dd) * dd * dd / (T::lit(4.0) * radius * radius))
}

/// Surface of radius `ε f(x)` around a straight axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceOfRevolution {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    pub f_prime2: Vec<f64>,
    pub length: f64,
}

impl SurfaceOfRevolution {
    pub fn from_profile(profile: &Profile, x: Vec<f64>) -> Result<Self> {
        let (f, f_prime, f_prime2) = profile.sample(&x)?;
        Self::from_arrays(x, f, f_prime, f_prime2)
    }

    pub fn from_arrays(x: Vec<f64>, f: Vec<f64>, f_prime: Vec<f64>, f_prime2: Vec<f64>) -> Result<Self> {
        let n = x.len();
        for (name, v) in [("f", &f), ("f'", &f_prime), ("f''", &f_prime2)] {
            if v.len() != n {
                return Err(WaveguideError::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                    context: format!("surface profile {name}"),
                });
            }
        }
        if n < 4 {
            return Err(WaveguideError::InvalidInput("need at least 4 nodes".into()));
        }
        if let Some(i) = f.iter().position(|v| !(*v > 0.0)) {
            return Err(WaveguideError::InvalidInput(format!("f <= 0 at x = {}", x[i])));
        }
        let length = x[n - 1] - x[0];
        Ok(Self {
            x,
            f,
            f_prime,
            f_prime2,
            length,
        })
    }

    pub fn step(&self) -> f64 {
        self.length / (self.x.len() - 1) as f64
    }

    /// Largest interior deviation of `(f', f'')` from central differences of `f`.
    pub fn consistency_error(&self) -> f64 {
        let (d1, d2) = central_derivatives(&self.f, self.step());
        let n = self.x.len();
        (1..n - 1)
            .map(|i| (d1[i] - self.f_prime[i]).abs().max((d2[i] - self.f_prime2[i]).abs()))
            .fold(0.0, f64::max)
    }

    /// Induced metric `(g_xx, g_φφ) = (1 + ε²f'², ε²f²)` at each node.
    pub fn metric_coeffs(&self, eps: f64) -> Vec<(f64, f64)> {
        self.f
            .iter()
            .zip(&self.f_prime)
            .map(|(f, fp)| (1.0 + eps * eps * fp * fp, eps * eps * f * f))
            .collect()
    }

    /// Horizontal correction `h^ε(∂_x, ∂_x)` at each node (`r = f`, `∂r/∂φ = 0`).
    pub fn horizontal_correction(&self, eps: f64) -> Vec<f64> {
        self.f
            .iter()
            .zip(&self.f_prime)
            .map(|(f, fp)| revolution_h_eps(eps, *f, *fp, 0.0))
            .collect()
    }
}

pub fn surface_metric_coeffs(surf: &SurfaceOfRevolution, eps: f64) -> Vec<(f64, f64)> {
    surf.metric_coeffs(eps)
}

/// `ε r² r_x² / (r_φ² + r²)` for a surface of revolution with radius function `r(x, φ)`.
pub fn revolution_h_eps(eps: f64, r: f64, r_x: f64, r_phi: f64) -> f64 {
    eps * r * r * r_x * r_x / (r_phi * r_phi + r * r)
}
