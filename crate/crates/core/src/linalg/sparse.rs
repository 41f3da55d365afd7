//! Compressed sparse row matrices and a Jacobi-preconditioned conjugate gradient.

use crate::error::{Result, WaveguideError};
use crate::scalar::Real;

/// Symmetric linear operator usable by [`pcg`] and the inverse power method.
pub trait SymOperator<T>: Sync {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[T], y: &mut [T]);
    fn diag(&self) -> Vec<T>;
}

impl<T: Real> SymOperator<T> for Csr<T> {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.matvec_into(x, y)
    }
    fn diag(&self) -> Vec<T> {
        self.diagonal()
    }
}

/// `A − σ M` with diagonal `M`.
pub(crate) struct Shifted<'a, T, A: ?Sized> {
    pub op: &'a A,
    pub mass: &'a [T],
    pub sigma: T,
}

impl<T: Real, A: SymOperator<T> + ?Sized> SymOperator<T> for Shifted<'_, T, A> {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn apply_into(&self, x: &[T], y: &mut [T]) {
        self.op.apply_into(x, y);
        if self.sigma != T::zero() {
            for ((yi, xi), m) in y.iter_mut().zip(x).zip(self.mass) {
                *yi = *yi - self.sigma * *m * *xi;
            }
        }
    }
    fn diag(&self) -> Vec<T> {
        self.op
            .diag()
            .into_iter()
            .zip(self.mass)
            .map(|(d, m)| d - self.sigma * *m)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Csr<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> Csr<T> {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|(r, c, _)| *r >= n || *c >= n) {
            return Err(WaveguideError::InvalidInput(format!(
                "triplet ({r}, {c}) outside {n}x{n} matrix"
            )));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                let k = vals.len() - 1;
                vals[k] = vals[k] + v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        for i in 0..self.n {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc = acc + self.vals[k] * x[self.cols[k]];
            }
            y[i] = acc;
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map(|k| self.vals[k])
                    .unwrap_or_else(T::zero)
            })
            .collect()
    }

    /// Largest asymmetry `|a_ij − a_ji|` over stored entries.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let aji = (self.row_ptr[j]..self.row_ptr[j + 1])
                    .find(|&m| self.cols[m] == i)
                    .map(|m| self.vals[m])
                    .unwrap_or_else(T::zero);
                worst = worst.max((self.vals[k] - aji).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `A x = b` for symmetric positive definite `A` by Jacobi-preconditioned CG,
/// starting from the supplied `x`.
pub fn pcg<T: Real, A: SymOperator<T> + ?Sized>(
    a: &A,
    b: &[T],
    x: &mut [T],
    rel_tol: T,
    max_iter: usize,
) -> Result<CgStats> {
    let n = a.dim();
    let inv_diag: Vec<T> = a
        .diag()
        .into_iter()
        .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
        .collect();
    let bnorm = b.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(CgStats {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![T::zero(); n];
    a.apply_into(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<T> = r.iter().zip(&inv_diag).map(|(a, b)| *a * *b).collect();
    let mut p = z.clone();
    let mut rz: T = r.iter().zip(&z).map(|(a, b)| *a * *b).sum();
    let mut ap = vec![T::zero(); n];
    let mut rel = r.iter().map(|v| *v * *v).sum::<T>().sqrt() / bnorm;
    for it in 0..max_iter {
        if rel <= rel_tol {
            return Ok(CgStats {
                iterations: it,
                relative_residual: rel.to_f64().unwrap_or(f64::NAN),
            });
        }
        a.apply_into(&p, &mut ap);
        let pap: T = p.iter().zip(&ap).map(|(a, b)| *a * *b).sum();
        if !(pap > T::zero()) {
            return Err(WaveguideError::NotPositiveDefinite {
                row: it,
                pivot: pap.to_f64().unwrap_or(f64::NAN),
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new: T = r.iter().zip(&z).map(|(a, b)| *a * *b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = r.iter().map(|v| *v * *v).sum::<T>().sqrt() / bnorm;
    }
    if rel <= rel_tol {
        return Ok(CgStats {
            iterations: max_iter,
            relative_residual: rel.to_f64().unwrap_or(f64::NAN),
        });
    }
    Err(WaveguideError::NoConvergence {
        method: "conjugate gradient".into(),
        iterations: max_iter,
        residual: rel.to_f64().unwrap_or(f64::NAN),
    })
}
