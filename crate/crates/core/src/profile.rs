//! Closed-form radius (half-width) profiles `f(x)` with first and second derivatives.

use crate::error::{Result, WaveguideError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `f = c`
    Constant { value: f64 },
    /// `f = base + amp · exp(−x² / width)`
    Bump { base: f64, amp: f64, width: f64 },
    /// `f = outer − depth / (1 + x²)`
    Constriction { outer: f64, depth: f64 },
    /// `f = scale · exp(rate · x)`
    Exponential { scale: f64, rate: f64 },
    /// `f = base + amp · sin(freq · x)`
    Sine { base: f64, amp: f64, freq: f64 },
    /// `f = base + curv · x²`
    Quadratic { base: f64, curv: f64 },
}

impl Profile {
    /// Validates parameters that are meaningful irrespective of the domain.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(WaveguideError::InvalidInput(m.to_string()));
        let params: Vec<f64> = match *self {
            Profile::Constant { value } => vec![value],
            Profile::Bump { base, amp, width } => vec![base, amp, width],
            Profile::Constriction { outer, depth } => vec![outer, depth],
            Profile::Exponential { scale, rate } => vec![scale, rate],
            Profile::Sine { base, amp, freq } => vec![base, amp, freq],
            Profile::Quadratic { base, curv } => vec![base, curv],
        };
        if params.iter().any(|p| !p.is_finite()) {
            return bad("profile parameters must be finite");
        }
        match *self {
            Profile::Constant { value } if value <= 0.0 => bad("constant profile must be positive"),
            Profile::Bump { width, .. } if width <= 0.0 => bad("bump width must be positive"),
            Profile::Exponential { scale, .. } if scale <= 0.0 => bad("exponential scale must be positive"),
            _ => Ok(()),
        }
    }

    pub fn value<T: Real>(&self, x: T) -> T {
        let l = T::lit;
        match *self {
            Profile::Constant { value } => l(value),
            Profile::Bump { base, amp, width } => l(base) + l(amp) * (-x * x / l(width)).exp(),
            Profile::Constriction { outer, depth } => l(outer) - l(depth) / (T::one() + x * x),
            Profile::Exponential { scale, rate } => l(scale) * (l(rate) * x).exp(),
            Profile::Sine { base, amp, freq } => l(base) + l(amp) * (l(freq) * x).sin(),
            Profile::Quadratic { base, curv } => l(base) + l(curv) * x * x,
        }
    }

    pub fn d1<T: Real>(&self, x: T) -> T {
        let l = T::lit;
        match *self {
            Profile::Constant { .. } => T::zero(),
            Profile::Bump { amp, width, .. } => {
                -l(2.0 * amp) * x / l(width) * (-x * x / l(width)).exp()
            }
            Profile::Constriction { depth, .. } => {
                let q = T::one() + x * x;
                l(2.0 * depth) * x / (q * q)
            }
            Profile::Exponential { scale, rate } => l(scale * rate) * (l(rate) * x).exp(),
            Profile::Sine { amp, freq, .. } => l(amp * freq) * (l(freq) * x).cos(),
            Profile::Quadratic { curv, .. } => l(2.0 * curv) * x,
        }
    }

    pub fn d2<T: Real>(&self, x: T) -> T {
        let l = T::lit;
        match *self {
            Profile::Constant { .. } => T::zero(),
            Profile::Bump { amp, width, .. } => {
                let w = l(width);
                l(2.0 * amp) / w * (l(2.0) * x * x / w - T::one()) * (-x * x / w).exp()
            }
            Profile::Constriction { depth, .. } => {
                let q = T::one() + x * x;
                l(2.0 * depth) * (T::one() - l(3.0) * x * x) / (q * q * q)
            }
            Profile::Exponential { scale, rate } => l(scale * rate * rate) * (l(rate) * x).exp(),
            Profile::Sine { amp, freq, .. } => -l(amp * freq * freq) * (l(freq) * x).sin(),
            Profile::Quadratic { curv, .. } => l(2.0 * curv),
        }
    }

    /// Samples `(f, f', f'')` on a grid, failing if `f <= 0` anywhere.
    pub fn sample(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        self.validate()?;
        let f: Vec<f64> = x.iter().map(|&t| self.value(t)).collect();
        if let Some((i, v)) = f.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(WaveguideError::InvalidInput(format!(
                "profile non-positive ({v}) at x = {}",
                x[i]
            )));
        }
        let d1 = x.iter().map(|&t| self.d1(t)).collect();
        let d2 = x.iter().map(|&t| self.d2(t)).collect();
        Ok((f, d1, d2))
    }
}

/// `n + 1` equispaced nodes on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..=n).map(|i| if i == n { b } else { a + h * i as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<Profile> {
        vec![
            Profile::Constant { value: 1.5 },
            Profile::Bump { base: 1.0, amp: 0.5, width: 0.5 },
            Profile::Constriction { outer: 2.0, depth: 1.0 },
            Profile::Exponential { scale: 1.0, rate: 1.0 },
            Profile::Sine { base: 1.0, amp: 0.1, freq: 1.0 },
            Profile::Quadratic { base: 1.0, curv: 1.0 },
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-4f64;
        for p in all() {
            for &x in &[-1.3f64, -0.2, 0.0, 0.7, 1.9] {
                let fd1 = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
                let fd2 = (p.value(x + h) - 2.0 * p.value(x) + p.value(x - h)) / (h * h);
                assert!((fd1 - p.d1(x)).abs() < 1e-7, "{p:?} d1 at {x}");
                assert!((fd2 - p.d2(x)).abs() < 1e-5, "{p:?} d2 at {x}");
            }
        }
    }

    #[test]
    fn constriction_values_at_origin() {
        let p = Profile::Constriction { outer: 2.0, depth: 1.0 };
        assert_eq!(p.value(0.0), 1.0);
        assert_eq!(p.d1(0.0), 0.0);
        assert_eq!(p.d2(0.0), 2.0);
    }

    #[test]
    fn sampling_rejects_non_positive() {
        let p = Profile::Sine { base: 0.5, amp: 1.0, freq: 1.0 };
        assert!(p.sample(&uniform_grid(-3.0, 3.0, 60)).is_err());
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = uniform_grid(-4.0, 4.0, 7);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], -4.0);
        assert_eq!(g[7], 4.0);
    }
}
