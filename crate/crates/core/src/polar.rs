//! Boundary-fitted elliptic-polar grid for disc and ellipse cross-sections.
//!
//! A point is `n = (a s cos θ, b s sin θ)` with `s ∈ [0, 1]`. Nodes sit at
//! `s_j = (j + ½) h_s`, `j = 0..ns`, where `h_s = 1/(ns + ½)` places the
//! Dirichlet boundary exactly at `s = 1`; `θ_k = k h_θ` is periodic. No node
//! lies on the coordinate singularity `s = 0`; differences across it use the
//! antipodal reflection `u(−s, θ) = u(s, θ + π)`.

use crate::error::{Result, WaveguideError};

#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    pub a: f64,
    pub b: f64,
    pub ns: usize,
    pub nt: usize,
    pub hs: f64,
    pub ht: f64,
}

/// Node reference: an unknown, or a Dirichlet boundary value (zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Unknown(usize),
    Boundary,
}

impl PolarGrid {
    pub fn new(a: f64, b: f64, ns: usize, nt: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(WaveguideError::InvalidInput("semi-axes must be positive".into()));
        }
        if ns < 2 || nt < 8 || !nt.is_multiple_of(2) {
            return Err(WaveguideError::InvalidInput(format!(
                "polar grid needs ns >= 2 and even nt >= 8 (got {ns}, {nt})"
            )));
        }
        Ok(Self {
            a,
            b,
            ns,
            nt,
            hs: 1.0 / (ns as f64 + 0.5),
            ht: 2.0 * std::f64::consts::PI / nt as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.nt + k
    }

    pub fn s(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hs
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.ht
    }

    /// Cartesian position of node `(j, k)` in the ellipse frame.
    pub fn position(&self, j: usize, k: usize) -> [f64; 2] {
        let (s, t) = (self.s(j), self.theta(k));
        [self.a * s * t.cos(), self.b * s * t.sin()]
    }

    /// Resolves `(j, k)` with `j ∈ [−1, ns]` and any integer `k`.
    fn node(&self, j: isize, k: isize) -> Node {
        let nt = self.nt as isize;
        if j >= self.ns as isize {
            return Node::Boundary;
        }
        let (j, k) = if j < 0 { (-1 - j, k + nt / 2) } else { (j, k) };
        Node::Unknown(self.index(j as usize, k.rem_euclid(nt) as usize))
    }

    /// Lumped mass (quadrature weights) `a b s_j h_s h_θ`.
    pub fn mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.len()];
        for j in 0..self.ns {
            let w = self.a * self.b * self.s(j) * self.hs * self.ht;
            for k in 0..self.nt {
                m[self.index(j, k)] = w;
            }
        }
        m
    }

    /// Entries `(p, q, v)` of the symmetric stiffness matrix of `∫|∇u|²`,
    /// scaled by `scale`; both `(p, q)` and `(q, p)` are emitted. Indices are
    /// offset by `offset`.
    pub fn stiffness_entries(&self, scale: f64, offset: usize) -> Vec<(usize, usize, f64)> {
        let (a, b, hs, ht) = (self.a, self.b, self.hs, self.ht);
        let ab = a * b;
        let mut out = Vec::with_capacity(self.len() * 13);
        let edge = |out: &mut Vec<(usize, usize, f64)>, p: Node, q: Node, w: f64| {
            let w = w * scale;
            match (p, q) {
                (Node::Unknown(p), Node::Unknown(q)) => {
                    out.push((p + offset, p + offset, w));
                    out.push((q + offset, q + offset, w));
                    out.push((p + offset, q + offset, -w));
                    out.push((q + offset, p + offset, -w));
                }
                (Node::Unknown(p), Node::Boundary) | (Node::Boundary, Node::Unknown(p)) => {
                    out.push((p + offset, p + offset, w));
                }
                _ => {}
            }
        };
        for j in 0..self.ns {
            for k in 0..self.nt {
                let (jj, kk) = (j as isize, k as isize);
                // s-edge between j and j+1
                let t = self.theta(k);
                let gss = (t.cos() / a).powi(2) + (t.sin() / b).powi(2);
                let w = ab * (j as f64 + 1.0) * hs * gss * ht / hs;
                edge(&mut out, self.node(jj, kk), self.node(jj + 1, kk), w);
                // θ-edge between k and k+1 at radius s_j
                let tm = t + 0.5 * ht;
                let gtt = (tm.sin() / a).powi(2) + (tm.cos() / b).powi(2);
                let w = ab * gtt / self.s(j) * hs / ht;
                edge(&mut out, self.node(jj, kk), self.node(jj, kk + 1), w);
            }
        }
        // mixed term 2 G^{sθ} u_s u_θ on corners (s = j' h_s, θ_{k+½})
        let mixed = 1.0 / (b * b) - 1.0 / (a * a);
        if mixed != 0.0 {
            for jp in 0..=self.ns {
                let area = if jp == 0 { 0.5 } else { 1.0 } * hs * ht;
                for k in 0..self.nt {
                    let tm = (k as f64 + 0.5) * ht;
                    let c = 2.0 * ab * tm.sin() * tm.cos() * mixed * area * scale;
                    let (j0, j1, k0, k1) = (jp as isize - 1, jp as isize, k as isize, k as isize + 1);
                    let nodes = [self.node(j0, k0), self.node(j0, k1), self.node(j1, k0), self.node(j1, k1)];
                    // D_s and D_θ as linear functionals on the four corner nodes
                    let ds = [-0.5 / hs, -0.5 / hs, 0.5 / hs, 0.5 / hs];
                    let dt = [-0.5 / ht, 0.5 / ht, -0.5 / ht, 0.5 / ht];
                    for p in 0..4 {
                        for q in 0..4 {
                            if let (Node::Unknown(np), Node::Unknown(nq)) = (nodes[p], nodes[q]) {
                                let v = 0.5 * c * (ds[p] * dt[q] + dt[p] * ds[q]);
                                out.push((np + offset, nq + offset, v));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn value(&self, u: &[f64], j: isize, k: isize) -> f64 {
        match self.node(j, k) {
            Node::Unknown(p) => u[p],
            Node::Boundary => 0.0,
        }
    }

    /// `(∂_s u, ∂_θ u)` at every node by central differences.
    pub fn polar_derivatives(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let mut out = vec![[0.0; 2]; self.len()];
        for j in 0..self.ns {
            for k in 0..self.nt {
                let (jj, kk) = (j as isize, k as isize);
                let us = (self.value(u, jj + 1, kk) - self.value(u, jj - 1, kk)) / (2.0 * self.hs);
                let ut = (self.value(u, jj, kk + 1) - self.value(u, jj, kk - 1)) / (2.0 * self.ht);
                out[self.index(j, k)] = [us, ut];
            }
        }
        out
    }

    /// Cartesian gradient (ellipse frame) at every node.
    pub fn gradient(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let d = self.polar_derivatives(u);
        let mut g = vec![[0.0; 2]; self.len()];
        for j in 0..self.ns {
            let s = self.s(j);
            for k in 0..self.nt {
                let t = self.theta(k);
                let (c, sn) = (t.cos(), t.sin());
                let [us, ut] = d[self.index(j, k)];
                g[self.index(j, k)] = [
                    us * c / self.a - ut * sn / (self.a * s),
                    us * sn / self.b + ut * c / (self.b * s),
                ];
            }
        }
        g
    }

    /// Cartesian gradient on the boundary ring `s = 1` (nodes `θ_k`) from a
    /// one-sided second-order difference in `s`; `∂_θ u = 0` there.
    pub fn boundary_gradient(&self, u: &[f64]) -> Vec<[f64; 2]> {
        let j1 = self.ns - 1;
        let j2 = self.ns - 2;
        (0..self.nt)
            .map(|k| {
                let us = (-4.0 * u[self.index(j1, k)] + u[self.index(j2, k)]) / (2.0 * self.hs);
                let t = self.theta(k);
                [us * t.cos() / self.a, us * t.sin() / self.b]
            })
            .collect()
    }

    /// Quadrature weights for `∫ g dn` with nodes plus the boundary ring:
    /// midpoint cells in `s`, the last half cell `[1 − h_s/2, 1]` by linear
    /// interpolation between the outer ring and the boundary. Returns
    /// `(node weights, boundary weights)`.
    pub fn quadrature(&self) -> (Vec<f64>, Vec<f64>) {
        let mut w = self.mass();
        let ab = self.a * self.b;
        let j = self.ns - 1;
        let extra = ab * self.s(j) * self.hs / 8.0 * self.ht;
        for k in 0..self.nt {
            w[self.index(j, k)] += extra;
        }
        let wb = vec![ab * 3.0 * self.hs / 8.0 * self.ht; self.nt];
        (w, wb)
    }

    /// Rotation generator `L = n¹∂₂ − n²∂₁` about the ellipse centre, by central differences.
    pub fn apply_l(&self, u: &[f64]) -> Vec<f64> {
        let d = self.polar_derivatives(u);
        let (ra, rb) = (self.a / self.b, self.b / self.a);
        let mut out = vec![0.0; self.len()];
        for j in 0..self.ns {
            let s = self.s(j);
            for k in 0..self.nt {
                let t = self.theta(k);
                let (c, sn) = (t.cos(), t.sin());
                let [us, ut] = d[self.index(j, k)];
                out[self.index(j, k)] = s * sn * c * (ra - rb) * us + (ra * c * c + rb * sn * sn) * ut;
            }
        }
        out
    }

    /// Sparse rows of the central-difference `L` operator: `(row, col, value)`.
    pub fn l_entries(&self) -> Vec<(usize, usize, f64)> {
        let (ra, rb) = (self.a / self.b, self.b / self.a);
        let mut out = Vec::with_capacity(self.len() * 4);
        for j in 0..self.ns {
            let s = self.s(j);
            for k in 0..self.nt {
                let t = self.theta(k);
                let (c, sn) = (t.cos(), t.sin());
                let row = self.index(j, k);
                let cs = s * sn * c * (ra - rb) / (2.0 * self.hs);
                let ct = (ra * c * c + rb * sn * sn) / (2.0 * self.ht);
                let (jj, kk) = (j as isize, k as isize);
                for (node, v) in [
                    (self.node(jj + 1, kk), cs),
                    (self.node(jj - 1, kk), -cs),
                    (self.node(jj, kk + 1), ct),
                    (self.node(jj, kk - 1), -ct),
                ] {
                    if let Node::Unknown(q) = node {
                        if v != 0.0 {
                            out.push((row, q, v));
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Csr;

    #[test]
    fn stiffness_is_symmetric_and_annihilates_nothing() {
        let g = PolarGrid::new(1.0, 0.5, 6, 16).unwrap();
        let k = Csr::from_triplets(g.len(), g.stiffness_entries(1.0, 0)).unwrap();
        assert!(k.asymmetry() < 1e-12);
        let ones = vec![1.0; g.len()];
        let e: f64 = k.matvec(&ones).iter().zip(&ones).map(|(a, b)| a * b).sum();
        assert!(e > 0.0);
    }

    #[test]
    fn l_of_radial_function_vanishes_on_disc() {
        let g = PolarGrid::new(1.0, 1.0, 8, 32).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|p| 1.0 - g.s(p / g.nt).powi(2)).collect();
        assert!(g.apply_l(&u).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn l_entries_match_apply() {
        let g = PolarGrid::new(1.0, 0.6, 5, 12).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|p| ((p * 37 % 11) as f64).sin()).collect();
        let l = Csr::from_triplets(g.len(), g.l_entries()).unwrap();
        let a = l.matvec(&u);
        let b = g.apply_l(&u);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_linear_function() {
        let g = PolarGrid::new(1.3, 0.7, 40, 64).unwrap();
        // u = n₁ vanishes nowhere on the boundary, so test away from it
        let u: Vec<f64> = (0..g.len()).map(|p| g.position(p / g.nt, p % g.nt)[0]).collect();
        let grad = g.gradient(&u);
        for j in 0..g.ns - 1 {
            for k in 0..g.nt {
                let d = grad[g.index(j, k)];
                assert!((d[0] - 1.0).abs() < 5e-3 && d[1].abs() < 5e-3, "{j} {k} {d:?}");
            }
        }
    }
}
