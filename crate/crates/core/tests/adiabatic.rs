#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveguide_core::adiabatic::*;
use waveguide_core::cross_section::*;
use waveguide_core::geometry::*;
use waveguide_core::profile::{uniform_grid, Profile};

fn circle_frame(radius: f64, length: f64, samples: usize) -> ParallelFrame {
    let c = CurveSpec::circle(radius, length, samples).unwrap();
    integrate_parallel_frame(&c, initial_normal(&c).unwrap()).unwrap()
}

fn straight(x0: f64, x1: f64, n: usize) -> (Vec<f64>, ParallelFrame) {
    let x = uniform_grid(x0, x1, n);
    (x.clone(), ParallelFrame::straight(x).unwrap())
}

#[test]
fn circle_frame_has_constant_inward_curvature() {
    let f = circle_frame(2.0, 3.0, 600);
    for k in &f.kappa {
        assert!((k[0] - 0.5).abs() < 1e-8 && k[1].abs() < 1e-8, "{k:?}");
    }
}

#[test]
fn bending_potential_vanishes_on_straight_base() {
    let mode = solve_ground_mode(&CrossSectionShape::disc(1.0), 32).unwrap();
    let (_, frame) = straight(0.0, 1.0, 50);
    assert!(bending_potential_d1(&frame, &mode, 0.1).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn bending_potential_at_zero_eps_is_minus_quarter_kappa_squared() {
    let mode = solve_ground_mode(&CrossSectionShape::ellipse(1.0, 0.6), 32).unwrap();
    let c = CurveSpec::helix(1.0, 0.5, 6.0, 600).unwrap();
    let frame = integrate_parallel_frame(&c, initial_normal(&c).unwrap()).unwrap();
    let v = bending_potential_d1(&frame, &mode, 0.0).unwrap();
    for (vi, k) in v.iter().zip(&frame.kappa) {
        let exact = -(k[0] * k[0] + k[1] * k[1]) / 4.0;
        assert!((vi - exact).abs() < 1e-12 * exact.abs().max(1.0));
    }
}

#[test]
fn centred_disc_bending_correction_is_second_order() {
    let mode = solve_ground_mode(&CrossSectionShape::disc(1.0), 64).unwrap();
    let frame = circle_frame(1.0, 1.0, 200);
    let dev = |eps: f64| {
        let v = bending_potential_d1(&frame, &mode, eps).unwrap();
        v[100] + 0.25
    };
    let ratio = dev(0.1) / dev(0.05);
    assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn self_intersection_is_reported() {
    let mode = solve_ground_mode(&CrossSectionShape::disc(1.0), 32).unwrap();
    let frame = circle_frame(0.5, 1.0, 100);
    assert!(matches!(
        bending_potential_d1(&frame, &mode, 0.6),
        Err(waveguide_core::WaveguideError::SelfIntersection { .. })
    ));
}

#[test]
fn twist_potential_examples() {
    let tw = TwistSpec::Linear { rate: 1.0 }.sample(&uniform_grid(0.0, 1.0, 10));
    let ell = solve_ground_mode(&CrossSectionShape::ellipse(1.0, 0.5), 64).unwrap();
    let v = twist_potential(&tw, ell.l_norm_sq);
    assert!(v.iter().all(|x| (x - ell.l_norm_sq).abs() < 1e-15));
    assert!(twist_potential(&TwistProfile::zero(5), ell.l_norm_sq).iter().all(|x| *x == 0.0));
    let disc = solve_ground_mode(&CrossSectionShape::disc(1.0), 64).unwrap();
    assert!(disc.l_norm_sq < 1e-20);
}

#[test]
fn general_twist_null_direction() {
    // k = 3: generators ordered (12), (13), (23)
    let lmat = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
    let mut r = DMatrix::zeros(3, 3);
    r[(0, 2)] = 0.7;
    r[(2, 0)] = -0.7;
    r[(1, 2)] = -0.7;
    r[(2, 1)] = 0.7;
    let v = twist_potential_general(&[r, DMatrix::zeros(3, 3)], &lmat).unwrap();
    assert!(v[0].abs() < 1e-15 && v[1] == 0.0);
    let mut not_psd = lmat.clone();
    not_psd[(0, 0)] = -1.0;
    assert!(twist_potential_general(&[DMatrix::zeros(3, 3)], &not_psd).is_err());
}

#[test]
fn hollow_potential_examples() {
    let disc = CrossSectionShape::disc(1.0);
    let x = uniform_grid(-1.0, 1.0, 20);
    let eps = 0.1;
    let exp_f = Profile::Exponential { scale: 1.0, rate: 1.0 };
    let (f, fp, fpp) = exp_f.sample(&x).unwrap();
    let v = hollow_potential(&FiberVolumeProfile::from_derivatives(&disc, &f, &fp, &fpp).unwrap(), eps);
    assert!(v.iter().all(|t| (t - eps * eps / 4.0).abs() < 1e-15));
    let c = Profile::Constriction { outer: 2.0, depth: 1.0 };
    let (f, fp, fpp) = c.sample(&[0.0, 1.0]).unwrap();
    let v = hollow_potential(&FiberVolumeProfile::from_derivatives(&disc, &f, &fp, &fpp).unwrap(), eps);
    assert!((v[0] - eps * eps).abs() < 1e-15);
    let k = Profile::Constant { value: 3.0 };
    let (f, fp, fpp) = k.sample(&x).unwrap();
    let v = hollow_potential(&FiberVolumeProfile::from_derivatives(&disc, &f, &fp, &fpp).unwrap(), eps);
    assert!(v.iter().all(|t| *t == 0.0));
}

#[test]
fn eps3_coefficient_follows_centre_of_mass() {
    let frame = circle_frame(2.0, 1.0, 100);
    let centred = solve_ground_mode(&CrossSectionShape::disc(1.0), 64).unwrap();
    let (m, _) = eps3_corrections_d1(&frame, &centred).unwrap();
    assert!(m.iter().all(|v| v.abs() < 1e-12));
    let shifted = solve_ground_mode(&CrossSectionShape::Disc { radius: 1.0, center: [0.3, 0.0] }, 64).unwrap();
    let (m, pot) = eps3_corrections_d1(&frame, &shifted).unwrap();
    assert!(m.iter().all(|v| (v - 0.3 * 0.5).abs() < 1e-6), "{}", m[0]);
    // congruent fibres: the potential part needs a varying radius
    assert!(pot.iter().all(|v| v.abs() < 1e-12));
    let (_, line) = straight(0.0, 1.0, 100);
    let (m, pot) = eps3_corrections_d1(&line, &shifted).unwrap();
    assert!(m.iter().chain(&pot).all(|v| *v == 0.0));
}

#[test]
fn straight_constant_tube_is_free_operator_plus_constant() {
    let mode = interval_mode_exact(1.0, 64).unwrap();
    let (x, frame) = straight(0.0, 1.0, 100);
    let eps = 0.2;
    let op = assemble_massive(&frame, &mode, None, &ScaledFibres::constant(x.len(), 1.0), eps, Alpha::One, true)
        .unwrap();
    let h2 = op.h * op.h;
    let lam = std::f64::consts::PI.powi(2) / 4.0;
    for d in op.matrix().diag() {
        assert!((d - (2.0 * eps * eps / h2 + lam)).abs() < 1e-9);
    }
    for o in op.matrix().off() {
        assert!((o + eps * eps / h2).abs() < 1e-9);
    }
}

#[test]
fn twisted_straight_ellipse_potential() {
    let mode = solve_ground_mode(&CrossSectionShape::ellipse(1.0, 0.5), 64).unwrap();
    let (x, frame) = straight(0.0, 2.0, 80);
    let tw = TwistSpec::Window { rate: 1.5, start: 0.5, end: 1.5, width: 0.1 }.sample(&x);
    let eps = 0.1;
    let b = potential_bundle_massive(&frame, &mode, Some(&tw), &ScaledFibres::constant(x.len(), 1.0), eps, Alpha::Two, true)
        .unwrap();
    let total = b.total_potential();
    for i in 0..x.len() {
        let expect = mode.lambda0 + eps * eps * tw.omega_prime[i].powi(2) * mode.l_norm_sq;
        assert!((total[i] - expect).abs() < 1e-12, "{i}");
    }
}

#[test]
fn hollow_exponential_shifts_free_spectrum() {
    let disc = CrossSectionShape::disc(1.0);
    let x = uniform_grid(0.0, std::f64::consts::PI, 1000);
    let eps = 0.5;
    let (f, fp, fpp) = Profile::Exponential { scale: 1.0, rate: 1.0 }.sample(&x).unwrap();
    let fv = FiberVolumeProfile::from_derivatives(&disc, &f, &fp, &fpp).unwrap();
    let s = solve_1d(&assemble_hollow(&x, &fv, eps).unwrap(), 3).unwrap();
    let (f0, _, _) = Profile::Constant { value: 1.0 }.sample(&x).unwrap();
    let zero = vec![0.0; x.len()];
    let fv0 = FiberVolumeProfile::from_derivatives(&disc, &f0, &zero, &zero).unwrap();
    let s0 = solve_1d(&assemble_hollow(&x, &fv0, eps).unwrap(), 3).unwrap();
    for (a, b) in s.eigenvalues.iter().zip(&s0.eigenvalues) {
        assert!((a - b - eps * eps / 4.0).abs() < 1e-10);
    }
}

fn harmonic_gap_errors(eps: f64) -> Vec<f64> {
    // λ₀ = (π²/4)/f², maximal width at x = 0
    let f = Profile::Bump { base: 1.0, amp: 0.5, width: 0.5 };
    let x = uniform_grid(-4.0, 4.0, 8000);
    let mode = interval_mode_exact(1.0, 64).unwrap();
    let frame = ParallelFrame::straight(x.clone()).unwrap();
    let fib = ScaledFibres::from_profile(&f, &x).unwrap();
    let s = solve_1d(&assemble_massive(&frame, &mode, None, &fib, eps, Alpha::One, true).unwrap(), 4).unwrap();
    let (f0, f2) = (f.value(0.0f64), f.d2(0.0f64));
    let lam_pp = -2.0 * mode.lambda0 * f2 / f0.powi(3);
    let omega = (lam_pp / 2.0).sqrt();
    s.eigenvalues.windows(2).map(|w| ((w[1] - w[0]) - 2.0 * eps * omega).abs()).collect()
}

#[test]
fn harmonic_level_spacing_converges_quadratically() {
    let eps = [0.1, 0.05, 0.025];
    let errs: Vec<Vec<f64>> = eps.iter().map(|e| harmonic_gap_errors(*e)).collect();
    for l in 0..3 {
        let e: Vec<f64> = errs.iter().map(|r| r[l]).collect();
        let fit = waveguide_core::compare::fit_power_law(&eps, &e).unwrap();
        assert!(fit.slope >= 1.9, "level {l}: slope {}", fit.slope);
    }
}

#[test]
fn harmonic_ground_level_matches_oscillator_formula() {
    let x = uniform_grid(-10.0, 10.0, 20_000);
    let eps = 0.01;
    let b = PotentialBundle {
        lambda0: x.iter().map(|t| t * t).collect(),
        v_a: vec![0.0; x.len()],
        v_bend_a: vec![0.0; x.len()],
        v_hollow: vec![0.0; x.len()],
        eps3_div_coeff: vec![0.0; x.len()],
        eps3_pot: vec![0.0; x.len()],
        x,
        eps,
    };
    let s = solve_1d(&AdiabaticOperator::new(b).unwrap(), 1).unwrap();
    assert!(((s.eigenvalues[0] - eps) / eps).abs() < 0.03);
}

#[test]
fn hollow_zero_mode_identity_for_random_profiles() {
    let disc = CrossSectionShape::disc(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eps = 0.1;
    for _ in 0..5 {
        let f = Profile::Bump {
            base: rng.random_range(0.5..2.0),
            amp: rng.random_range(-0.4..1.0),
            width: rng.random_range(0.3..2.0),
        };
        let mut worst = Vec::new();
        for n in [400usize, 800] {
            let x = uniform_grid(-3.0, 3.0, n);
            let (fv, fp, fpp) = f.sample(&x).unwrap();
            let vol = FiberVolumeProfile::from_derivatives(&disc, &fv, &fp, &fpp).unwrap();
            let op = assemble_hollow(&x, &vol, eps).unwrap();
            let root: Vec<f64> = fv.iter().map(|v| v.sqrt()).collect();
            let r = op.apply(&root);
            let h = op.h;
            let c = r[1..r.len() - 1].iter().map(|v| v.abs()).fold(0.0, f64::max) / (eps * eps * h * h);
            worst.push(c);
        }
        assert!(worst[0] < 10.0 && (worst[1] / worst[0] - 1.0).abs() < 0.1, "{worst:?}");
    }
}

#[test]
fn alpha_two_corrections_are_third_order() {
    let shape = CrossSectionShape::Disc { radius: 1.0, center: [0.3, 0.0] };
    let mode = solve_ground_mode(&shape, 64).unwrap();
    let frame = circle_frame(2.0, 2.0, 2000);
    let fib = ScaledFibres::constant(frame.len(), 1.0);
    let diff = |eps: f64| {
        let with = assemble_massive(&frame, &mode, None, &fib, eps, Alpha::Two, false).unwrap();
        let mut b = with.bundle.clone();
        b.eps3_div_coeff.iter_mut().for_each(|v| *v = 0.0);
        b.eps3_pot.iter_mut().for_each(|v| *v = 0.0);
        let without = AdiabaticOperator::new(b).unwrap();
        solve_1d(&with, 1).unwrap().eigenvalues[0] - solve_1d(&without, 1).unwrap().eigenvalues[0]
    };
    let (d1, d2) = (diff(0.1), diff(0.05));
    let ratio = d1 / d2;
    assert!((6.0..10.0).contains(&ratio), "ratio {ratio} ({d1}, {d2})");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn born_huang_potential_is_nonnegative(
        base in 0.5f64..2.0, amp in -0.4f64..1.0, width in 0.2f64..2.0,
        rate in -3.0f64..3.0, eps in 0.01f64..0.3,
    ) {
        let mode = solve_ground_mode(&CrossSectionShape::ellipse(1.0, 0.6), 32).unwrap();
        let x = uniform_grid(-2.0, 2.0, 100);
        let frame = ParallelFrame::straight(x.clone()).unwrap();
        let fib = ScaledFibres::from_profile(&Profile::Bump { base, amp, width }, &x).unwrap();
        let tw = TwistSpec::Window { rate, start: -1.0, end: 1.0, width: 0.3 }.sample(&x);
        let b = potential_bundle_massive(&frame, &mode, Some(&tw), &fib, eps, Alpha::Two, true).unwrap();
        prop_assert!(b.v_a.iter().all(|v| *v >= 0.0));
    }
}
