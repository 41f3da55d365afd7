use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveguide_core::cross_section::{solve_ground_mode, CrossSectionShape};
use waveguide_core::geometry::{TwistProfile, TwistSpec};
use waveguide_core::linalg::SymOperator;
use waveguide_core::polar::PolarGrid;
use waveguide_core::profile::{uniform_grid, Profile};
use waveguide_core::reference::*;
use waveguide_core::special::{bessel_zero_in, j0_first_zero};
use waveguide_core::WaveguideError;

const ONE: Profile = Profile::Constant { value: 1.0 };

#[test]
fn strip_separable_values() {
    let base = BaseInterval::new(0.0, PI).unwrap();
    let eps = 0.2;
    let s = solve_strip(&ONE, eps, base, 100, 40, 3).unwrap();
    for (j, v) in s.eigenvalues.iter().enumerate() {
        let jj = (j + 1) as f64;
        let exact = PI * PI / 4.0 + eps * eps * jj * jj;
        assert!(((v - exact) / exact).abs() < 1e-3);
    }
    let wide = solve_strip(&Profile::Constant { value: 2.0 }, eps, base, 100, 40, 1).unwrap();
    let exact = PI * PI / 16.0 + eps * eps;
    assert!(((wide.ground() - exact) / exact).abs() < 1e-3);
    assert!(s.eigenvalues.iter().all(|v| *v >= -1e-8));
}

#[test]
fn strip_bump_is_bracketed_by_straight_strips() {
    let f = Profile::Bump { base: 1.0, amp: 0.3, width: 1.0 };
    let base = BaseInterval::new(-4.0, 4.0).unwrap();
    let eps = 0.1;
    let v = solve_strip(&f, eps, base, 160, 24, 1).unwrap().ground();
    let upper = PI * PI / 4.0 + eps * eps * PI * PI / 64.0;
    let lower = PI * PI / (4.0 * 1.3f64.powi(2));
    assert!(lower < v && v < upper, "{lower} < {v} < {upper}");
}

#[test]
fn strip_grid_convergence_is_second_order() {
    let f = Profile::Bump { base: 1.0, amp: 0.5, width: 0.5 };
    let base = BaseInterval::new(-4.0, 4.0).unwrap();
    let v: Vec<f64> = [(100, 10), (200, 20), (400, 40)]
        .iter()
        .map(|&(nx, ns)| solve_strip(&f, 0.1, base, nx, ns, 1).unwrap().ground())
        .collect();
    let ratio = (v[1] - v[0]) / (v[2] - v[1]);
    assert!(ratio >= 3.5, "ratio {ratio}");
}

#[test]
fn dirichlet_monotonicity_for_nested_profiles() {
    let base = BaseInterval::new(-3.0, 3.0).unwrap();
    let small = Profile::Bump { base: 1.0, amp: 0.2, width: 1.0 };
    let large = Profile::Bump { base: 1.1, amp: 0.4, width: 1.0 };
    let s = |f: &Profile| solve_strip(f, 0.1, base, 120, 16, 1).unwrap().ground();
    assert!(s(&large) < s(&small));
    let t = |f: &Profile| solve_axisym_tube(f, 0.1, 0, base, 120, 16, 1).unwrap().ground();
    assert!(t(&large) < t(&small));
}

#[test]
fn axisymmetric_tube_matches_bessel_zeros() {
    let base = BaseInterval::new(0.0, PI).unwrap();
    let eps = 0.3;
    let j01 = j0_first_zero();
    let s = solve_axisym_tube(&ONE, eps, 0, base, 100, 60, 2).unwrap();
    for (j, v) in s.eigenvalues.iter().enumerate() {
        let jj = (j + 1) as f64;
        let exact = j01 * j01 + eps * eps * jj * jj;
        assert!(((v - exact) / exact).abs() < 2e-3, "{v} vs {exact}");
    }
    let j11 = bessel_zero_in(1, 3.5, 4.0).unwrap();
    assert!(3.83170 < j11 && j11 < 3.83171);
    let s1 = solve_axisym_tube(&ONE, eps, 1, base, 100, 60, 1).unwrap();
    let exact = j11 * j11 + eps * eps;
    assert!(((s1.ground() - exact) / exact).abs() < 2e-3);
    assert!(s1.ground() > s.ground());
}

#[test]
fn hollow_cylinder_and_positivity() {
    let base = BaseInterval::new(-10.0, 10.0).unwrap();
    let eps = 0.1;
    let s = solve_hollow_surface(&ONE, eps, 0, base, 8000, 3).unwrap();
    for (j, v) in s.eigenvalues.iter().enumerate() {
        let jj = (j + 1) as f64;
        let exact = eps * eps * PI * PI * jj * jj / 400.0;
        assert!(((v - exact) / exact).abs() < 1e-4);
    }
    let c = Profile::Constriction { outer: 2.0, depth: 1.0 };
    for m in [0, 1, 2] {
        let s = solve_hollow_surface(&c, eps, m, base, 4000, 2).unwrap();
        assert!(s.eigenvalues.iter().all(|v| *v >= -1e-8));
    }
}

#[test]
fn untwisted_tube_is_separable() {
    let shape = CrossSectionShape::ellipse(1.0, 0.5);
    let base = BaseInterval::new(0.0, 2.0).unwrap();
    let opts = TwistedOptions { nx: 16, n_fibre: 32, ..Default::default() };
    let eps = 0.2;
    let s = solve_twisted_tube(&shape, &TwistProfile::zero(17), eps, base, &opts).unwrap();
    let lam = solve_ground_mode(&shape, 32).unwrap().lambda0;
    let h = 2.0 / 16.0;
    let lx = 4.0 / (h * h) * (PI * h / 4.0).sin().powi(2);
    assert!((s.ground() - (lam + eps * eps * lx)).abs() < 1e-8, "{} vs {}", s.ground(), lam + eps * eps * lx);
}

#[test]
fn disc_twist_leaves_ground_state_unchanged() {
    let shape = CrossSectionShape::disc(1.0);
    let base = BaseInterval::new(0.0, 2.0).unwrap();
    let opts = TwistedOptions { nx: 16, n_fibre: 32, ..Default::default() };
    let x = uniform_grid(0.0, 2.0, 16);
    let tw = TwistSpec::Window { rate: 3.0, start: 0.5, end: 1.5, width: 0.2 }.sample(&x);
    let a = solve_twisted_tube(&shape, &tw, 0.2, base, &opts).unwrap().ground();
    let b = solve_twisted_tube(&shape, &TwistProfile::zero(17), 0.2, base, &opts).unwrap().ground();
    assert!((a - b).abs() < 1e-6);
}

#[test]
fn twisted_operator_is_symmetric_and_nonnegative() {
    let grid = PolarGrid::new(1.0, 0.5, 6, 16).unwrap();
    let rate = vec![0.0, 1.0, 2.0, -1.5, 0.5];
    let op = TwistedOperator::new(grid, rate, 0.25, 0.3).unwrap();
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (mut au, mut av) = (vec![0.0; n], vec![0.0; n]);
    op.apply_into(&u, &mut au);
    op.apply_into(&v, &mut av);
    let vau: f64 = v.iter().zip(&au).map(|(a, b)| a * b).sum();
    let uav: f64 = u.iter().zip(&av).map(|(a, b)| a * b).sum();
    assert!((vau - uav).abs() < 1e-10 * vau.abs().max(1.0));
    let uau: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum();
    assert!(uau > 0.0);
    // diagonal agrees with unit-vector probes
    let d = op.diag();
    for i in [0, 7, n / 2, n - 1] {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let mut ae = vec![0.0; n];
        op.apply_into(&e, &mut ae);
        assert!((ae[i] - d[i]).abs() < 1e-9 * d[i].abs());
    }
}

#[test]
fn twisted_grid_cap_is_enforced() {
    let base = BaseInterval::new(0.0, 1.0).unwrap();
    let opts = TwistedOptions { nx: 64, n_fibre: 64, cap: 10_000, ..Default::default() };
    let r = solve_twisted_tube(&CrossSectionShape::disc(1.0), &TwistProfile::zero(65), 0.1, base, &opts);
    assert!(matches!(r, Err(WaveguideError::TooLarge { .. })));
    let off = CrossSectionShape::Disc { radius: 1.0, center: [0.2, 0.0] };
    let opts = TwistedOptions { nx: 8, n_fibre: 16, ..Default::default() };
    assert!(solve_twisted_tube(&off, &TwistProfile::zero(9), 0.1, base, &opts).is_err());
}
