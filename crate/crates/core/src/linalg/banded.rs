//! Symmetric banded matrices in lower-triangle storage and their Cholesky factors.
//!
//! Only entries with `i >= j` are stored, so any assembled matrix is exactly
//! symmetric regardless of the order in which contributions were added.

use crate::error::{Result, WaveguideError};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct BandedSym<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> BandedSym<T> {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        let bw = bandwidth.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to entry `(i, j)` (and implicitly to `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(r - c <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let k = self.idx(r, c);
        self.data[k] = self.data[k] + v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            return T::zero();
        }
        self.data[self.idx(r, c)]
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let mut acc = T::zero();
            for j in j0..i {
                let a = row[self.bw + j - i];
                acc = acc + a * x[j];
                y[j] = y[j] + a * x[i];
            }
            y[i] = y[i] + acc + row[self.bw] * x[i];
        }
        y
    }

    /// Replaces `A` by `D A D` with `D = diag(d)`.
    pub fn scale_symmetric(&mut self, d: &[T]) {
        assert_eq!(d.len(), self.n);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let k = self.idx(i, j);
                self.data[k] = self.data[k] * d[i] * d[j];
            }
        }
    }

    pub fn shift_diagonal(&mut self, sigma: T) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] = self.data[k] - sigma;
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        let mut rows = vec![T::zero(); self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let a = self.data[self.idx(i, j)].abs();
                rows[i] = rows[i] + a;
                if j != i {
                    rows[j] = rows[j] + a;
                }
            }
        }
        rows.into_iter().fold(T::zero(), T::max)
    }

    /// Lower and upper Gershgorin bounds for the spectrum.
    pub fn gershgorin(&self) -> (T, T) {
        let mut radius = vec![T::zero(); self.n];
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..i {
                let a = self.data[self.idx(i, j)].abs();
                radius[i] = radius[i] + a;
                radius[j] = radius[j] + a;
            }
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..self.n {
            let d = self.data[self.idx(i, i)];
            lo = lo.min(d - radius[i]);
            hi = hi.max(d + radius[i]);
        }
        (lo, hi)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Cholesky factorisation `A = L Lᵀ`; fails with the offending row if `A`
    /// is not numerically positive definite.
    pub fn cholesky(&self) -> Result<BandedCholesky<T>> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + bw + j - i];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in k0..j {
                    s = s - l[ri + k] * l[rj + k];
                }
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(WaveguideError::NotPositiveDefinite {
                            row: i,
                            pivot: s.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + bw + j - i] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, data: l })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

impl<T: Real> BandedCholesky<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        assert_eq!(x.len(), self.n);
        let w = self.bw + 1;
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let r = i * w + self.bw - i;
            let mut s = x[i];
            for j in j0..i {
                s = s - self.data[r + j] * x[j];
            }
            x[i] = s / self.data[i * w + self.bw];
        }
        for i in (0..self.n).rev() {
            x[i] = x[i] / self.data[i * w + self.bw];
            let xi = x[i];
            let j0 = i.saturating_sub(self.bw);
            let r = i * w + self.bw - i;
            for j in j0..i {
                x[j] = x[j] - self.data[r + j] * xi;
            }
        }
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> T {
        let w = self.bw + 1;
        (0..self.n)
            .map(|i| self.data[i * w + self.bw].ln())
            .sum::<T>()
            * T::lit(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, bw: usize) -> BandedSym<f64> {
        let mut a = BandedSym::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 4.0 + bw as f64 * 2.0);
            for k in 1..=bw.min(i) {
                a.add(i, i - k, -1.0 / (k as f64 + (i % 3) as f64));
            }
        }
        a
    }

    #[test]
    fn symmetric_access_and_matvec() {
        let a = sample(10, 3);
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let y = a.matvec(&x);
        for i in 0..10 {
            let expect: f64 = (0..10).map(|j| a.get(i, j) * x[j]).sum();
            assert!((y[i] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_solves() {
        let a = sample(40, 5);
        let x: Vec<f64> = (0..40).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let b = a.matvec(&x);
        let c = a.cholesky().unwrap();
        let y = c.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = sample(8, 2);
        a.shift_diagonal(100.0);
        assert!(matches!(
            a.cholesky(),
            Err(WaveguideError::NotPositiveDefinite { .. })
        ));
    }
}
