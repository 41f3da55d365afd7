//! Bessel functions of the first kind by power series, and their first zeros by bisection.
//!
//! These serve as independent oracles for the disc cross-section and the
//! axisymmetric tube; no zero is hard-coded.

use crate::error::{Result, WaveguideError};

const SERIES_TERMS: usize = 60;

/// `J_n(x)` for integer order `n >= 0` via its Maclaurin series.
/// Accurate for `|x| <= 10` in double precision.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..SERIES_TERMS {
        term *= q / (k as f64 * (k as f64 + n as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Root of `J_n` in `[lo, hi]` by bisection to machine precision.
pub fn bessel_zero_in(n: u32, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = bessel_j(n, a);
    let fb = bessel_j(n, b);
    if fa * fb > 0.0 {
        return Err(WaveguideError::InvalidInput(format!(
            "J_{n} does not change sign on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = bessel_j(n, m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// First positive zero of `J_0`.
pub fn j0_first_zero() -> f64 {
    bessel_zero_in(0, 2.0, 3.0).expect("J0 brackets its first zero on [2, 3]")
}

/// First positive zero of `J_1`.
pub fn j1_first_zero() -> f64 {
    bessel_zero_in(1, 3.5, 4.0).expect("J1 brackets its first zero on [3.5, 4]")
}
