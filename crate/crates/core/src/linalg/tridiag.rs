//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for eigenvalues,
//! inverse iteration for eigenvectors.

use crate::error::{Result, WaveguideError};
use crate::scalar::Real;

/// One eigenpair together with its relative residual
/// `‖T v − λ v‖ / (‖T‖₁ ‖v‖)`.
#[derive(Debug, Clone)]
pub struct EigenPair<T> {
    pub value: T,
    pub vector: Vec<T>,
    pub residual: T,
}

/// Real symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal<T> {
    diag: Vec<T>,
    off: Vec<T>,
}

impl<T: Real> SymTridiagonal<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() {
            return Err(WaveguideError::InvalidInput("empty tridiagonal matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(WaveguideError::DimensionMismatch {
                expected: diag.len() - 1,
                got: off.len(),
                context: "tridiagonal off-diagonal".into(),
            });
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(WaveguideError::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    pub fn off(&self) -> &[T] {
        &self.off
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        let n = self.len();
        assert_eq!(v.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc = acc + self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc = acc + self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Maximum absolute row sum (equals the 1-norm by symmetry).
    pub fn norm_one(&self) -> T {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s = s + self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s = s + self.off[i].abs();
                }
                s
            })
            .fold(T::zero(), T::max)
    }

    pub fn gershgorin(&self) -> (T, T) {
        let n = self.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let mut r = T::zero();
            if i > 0 {
                r = r + self.off[i - 1].abs();
            }
            if i + 1 < n {
                r = r + self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly smaller than `x`.
    pub fn sturm_count(&self, x: T) -> usize {
        let tiny = T::min_positive_value().sqrt() * self.norm_one().max(T::one());
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q == T::zero() {
            q = -tiny;
        }
        if q < T::zero() {
            count += 1;
        }
        for i in 1..self.len() {
            let e = self.off[i - 1];
            q = self.diag[i] - x - e * e / q;
            if q == T::zero() {
                q = -tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection, converged to
    /// a few ulps of the matrix norm.
    pub fn eigenvalue(&self, k: usize) -> Result<T> {
        if k >= self.len() {
            return Err(WaveguideError::InvalidInput(format!(
                "eigenvalue index {k} out of range for size {}",
                self.len()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = self.norm_one().max(T::min_positive_value());
        let pad = T::lit(1e-12) * scale;
        lo = lo - pad;
        hi = hi + pad;
        let tol = T::lit(4.0) * T::epsilon() * scale;
        for _ in 0..200 {
            if hi - lo <= tol {
                break;
            }
            let mid = T::lit(0.5) * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(T::lit(0.5) * (lo + hi))
    }

    pub fn lowest_eigenvalues(&self, count: usize) -> Result<Vec<T>> {
        (0..count).map(|k| self.eigenvalue(k)).collect()
    }

    /// Lowest `count` eigenpairs; eigenvectors normalised in the Euclidean norm
    /// with a positive first non-negligible component.
    pub fn lowest_eigenpairs(&self, count: usize) -> Result<Vec<EigenPair<T>>> {
        let values = self.lowest_eigenvalues(count)?;
        let norm = self.norm_one().max(T::min_positive_value());
        let mut pairs: Vec<EigenPair<T>> = Vec::with_capacity(count);
        for (k, &lambda) in values.iter().enumerate() {
            let previous: Vec<&[T]> = pairs.iter().map(|p| p.vector.as_slice()).collect();
            let vector = self.inverse_iteration(lambda, k, &previous)?;
            let tv = self.matvec(&vector);
            let res = tv
                .iter()
                .zip(&vector)
                .map(|(a, b)| (*a - lambda * *b).powi(2))
                .sum::<T>()
                .sqrt()
                / norm;
            pairs.push(EigenPair {
                value: lambda,
                vector,
                residual: res,
            });
        }
        Ok(pairs)
    }

    fn inverse_iteration(&self, lambda: T, seed: usize, previous: &[&[T]]) -> Result<Vec<T>> {
        let n = self.len();
        let norm = self.norm_one().max(T::min_positive_value());
        let lu = TridiagLu::factor(self, lambda, T::epsilon() * norm);
        // deterministic, non-symmetric start vector
        let mut v: Vec<T> = (0..n)
            .map(|i| {
                let t = T::from_usize_lossy((i * 7 + seed * 13) % 17 + 1);
                T::one() + t / T::lit(17.0)
            })
            .collect();
        normalize(&mut v);
        let mut last_res = T::infinity();
        for it in 0..8 {
            let mut y = lu.solve(&v);
            for p in previous {
                let d = dot(&y, p);
                for (yi, pi) in y.iter_mut().zip(p.iter()) {
                    *yi = *yi - d * *pi;
                }
            }
            if !normalize(&mut y) {
                return Err(WaveguideError::NoConvergence {
                    method: "tridiagonal inverse iteration".into(),
                    iterations: it,
                    residual: f64::NAN,
                });
            }
            v = y;
            let tv = self.matvec(&v);
            let res = tv
                .iter()
                .zip(&v)
                .map(|(a, b)| (*a - lambda * *b).powi(2))
                .sum::<T>()
                .sqrt()
                / norm;
            if it >= 1 && (res <= T::lit(64.0) * T::epsilon() * T::from_usize_lossy(n).sqrt() || res >= last_res) {
                break;
            }
            last_res = res;
        }
        if let Some(first) = v.iter().copied().find(|x| x.abs() > T::lit(1e-3) / T::from_usize_lossy(n).sqrt()) {
            if first < T::zero() {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(v)
    }
}

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub(crate) fn normalize<T: Real>(v: &mut [T]) -> bool {
    let n = dot(v, v).sqrt();
    if !(n > T::zero()) || !n.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x = *x / n);
    true
}

/// LU factorisation of `T − λI` with partial pivoting (the tridiagonal
/// analogue of LAPACK `gttrf`).
struct TridiagLu<T> {
    dl: Vec<T>,
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    swapped: Vec<bool>,
}

impl<T: Real> TridiagLu<T> {
    fn factor(m: &SymTridiagonal<T>, shift: T, tiny: T) -> Self {
        let n = m.len();
        let mut d: Vec<T> = m.diag.iter().map(|&x| x - shift).collect();
        let mut dl = m.off.clone();
        let mut du = m.off.clone();
        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == T::zero() {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] = d[i + 1] - fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1] == T::zero() {
            d[n - 1] = tiny;
        }
        for x in d.iter_mut() {
            if x.abs() < tiny {
                *x = if *x < T::zero() { -tiny } else { tiny };
            }
        }
        Self {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.d.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] = x[i + 1] - self.dl[i] * x[i];
        }
        x[n - 1] = x[n - 1] / self.d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - self.du[n - 2] * x[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - self.du[i] * x[i + 1] - self.du2[i] * x[i + 2]) / self.d[i];
        }
        x
    }
}
