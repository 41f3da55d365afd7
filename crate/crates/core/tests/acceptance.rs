//! Acceptance suite: one PASS/FAIL line per criterion, printed to stdout.
//! Run with `cargo test -p waveguide-core --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveguide_core::adiabatic::*;
use waveguide_core::compare::{fit_power_law, richardson, HollowSweep, StripSweep, DEFAULT_EPS};
use waveguide_core::cross_section::*;
use waveguide_core::geometry::*;
use waveguide_core::profile::{uniform_grid, Profile};
use waveguide_core::reference::*;
use waveguide_core::special::j0_first_zero;

const ONE: Profile = Profile::Constant { value: 1.0 };

fn report(id: u32, name: &str, pass: bool, detail: String, started: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id} [{name}]: {verdict} ({detail}; {:.1?})", started.elapsed());
    assert!(pass, "criterion {id} failed: {detail}");
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn criterion_1_analytic_oracles() {
    let t = Instant::now();
    let base = BaseInterval::new(0.0, PI).unwrap();
    let mut worst = [0.0f64; 3];
    for eps in [0.1, 0.2, 0.3] {
        let s = solve_strip(&ONE, eps, base, 400, 80, 3).unwrap();
        for (j, v) in s.eigenvalues.iter().enumerate() {
            let jj = (j + 1) as f64;
            worst[0] = worst[0].max(rel(*v, PI * PI / 4.0 + eps * eps * jj * jj));
        }
        let tube = solve_axisym_tube(&ONE, eps, 0, base, 200, 80, 3).unwrap();
        let j01 = j0_first_zero();
        for (j, v) in tube.eigenvalues.iter().enumerate() {
            let jj = (j + 1) as f64;
            worst[1] = worst[1].max(rel(*v, j01 * j01 + eps * eps * jj * jj));
        }
        let hollow = solve_hollow_surface(&ONE, eps, 0, base, 4000, 3).unwrap();
        for (j, v) in hollow.eigenvalues.iter().enumerate() {
            let jj = (j + 1) as f64;
            worst[2] = worst[2].max(rel(*v, eps * eps * jj * jj));
        }
    }
    let pass = worst[0] <= 1e-3 && worst[1] <= 2e-3 && worst[2] <= 1e-4;
    report(
        1,
        "analytic oracles",
        pass,
        format!("strip {:.2e} <= 1e-3, tube {:.2e} <= 2e-3, hollow {:.2e} <= 1e-4", worst[0], worst[1], worst[2]),
        t,
    );
}

#[test]
fn criterion_2_cross_section_oracle() {
    let t = Instant::now();
    let j2 = j0_first_zero().powi(2);
    let coarse = solve_ground_mode(&CrossSectionShape::disc(1.0), 128).unwrap();
    let fine = solve_ground_mode(&CrossSectionShape::disc(1.0), 256).unwrap();
    let disc = richardson(&[coarse.lambda0, fine.lambda0], 2.0).unwrap().value;
    let interval = solve_ground_mode(&CrossSectionShape::interval(1.0), 256).unwrap().lambda0;
    let (ed, ei) = ((disc - j2).abs(), (interval - PI * PI / 4.0).abs());
    report(
        2,
        "cross-section oracle",
        ed <= 5e-3 && ei <= 2e-3,
        format!("disc |λ₀ − j01²| = {ed:.2e} <= 5e-3, interval {ei:.2e} <= 2e-3"),
        t,
    );
}

#[test]
fn criterion_3_harmonic_level_law() {
    let t = Instant::now();
    // λ₀ = (π²/4)/f² has a non-degenerate minimum at the widest point x = 0.
    let f = Profile::Bump { base: 1.0, amp: 0.5, width: 0.5 };
    let mode = interval_mode_exact(1.0, 64).unwrap();
    let x = uniform_grid(-4.0, 4.0, 8000);
    let frame = ParallelFrame::straight(x.clone()).unwrap();
    let fib = ScaledFibres::from_profile(&f, &x).unwrap();
    let (f0, f2) = (f.value(0.0f64), f.d2(0.0f64));
    let omega = (-mode.lambda0 * f2 / f0.powi(3)).sqrt();
    let eps = [0.1, 0.05, 0.025];
    let gaps: Vec<Vec<f64>> = eps
        .iter()
        .map(|&e| {
            let op = assemble_massive(&frame, &mode, None, &fib, e, Alpha::One, true).unwrap();
            let s = solve_1d(&op, 4).unwrap();
            s.eigenvalues.windows(2).map(|w| ((w[1] - w[0]) - 2.0 * e * omega).abs()).collect()
        })
        .collect();
    let slopes: Vec<f64> = (0..3)
        .map(|l| fit_power_law(&eps, &gaps.iter().map(|g| g[l]).collect::<Vec<_>>()).unwrap().slope)
        .collect();
    let pass = slopes.iter().all(|s| *s >= 1.9);
    report(3, "harmonic level law", pass, format!("orders {slopes:.3?} >= 1.9 for l = 0, 1, 2"), t);
}

#[test]
fn criterion_4_massive_strip_convergence() {
    let t = Instant::now();
    let sweep = StripSweep {
        profile: Profile::Bump { base: 1.0, amp: 0.5, width: 0.5 },
        base: BaseInterval::new(-4.0, 4.0).unwrap(),
        eps_values: DEFAULT_EPS.to_vec(),
        grids: vec![(400, 40), (800, 80), (1600, 160)],
        count: 1,
        min_order: 2.5,
    };
    let r = sweep.run().unwrap();
    let gate = r.check_discretization();
    let slope = r.fits[0].slope().unwrap_or(f64::NAN);
    let worst_disc = r.discretization.iter().map(|d| d[0]).fold(0.0, f64::max);
    let min_err = r.paired_errors.iter().map(|e| e[0]).fold(f64::INFINITY, f64::min);
    report(
        4,
        "massive strip convergence",
        r.passed(0) && gate.is_ok(),
        format!(
            "order {slope:.3} >= 2.5, leave-one-out {:.3}, grid error {worst_disc:.2e} vs smallest error {min_err:.2e}",
            r.fits[0].leave_one_out
        ),
        t,
    );
}

#[test]
fn criterion_5_hollow_convergence() {
    let t = Instant::now();
    let sweep = HollowSweep {
        profile: Profile::Constriction { outer: 2.0, depth: 1.0 },
        base: BaseInterval::new(-10.0, 10.0).unwrap(),
        eps_values: DEFAULT_EPS.to_vec(),
        grids: vec![20_000, 40_000],
        count: 1,
        min_order: 2.5,
    };
    let r = sweep.run().unwrap();
    let slope = r.fits[0].slope().unwrap_or(f64::NAN);
    let sign = if r.mu[0][0] > r.nu[0][0] { "mu > nu" } else { "mu <= nu" };
    report(
        5,
        "hollow convergence",
        r.passed(0) && r.check_discretization().is_ok(),
        format!("order {slope:.3} >= 2.5, leave-one-out {:.3}, {sign}", r.fits[0].leave_one_out),
        t,
    );
}

#[test]
fn criterion_6_hollow_zero_mode_identity() {
    let t = Instant::now();
    let disc = CrossSectionShape::disc(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 0.1;
    let mut constants = Vec::new();
    for _ in 0..5 {
        let f = Profile::Bump {
            base: rng.random_range(0.5..2.0),
            amp: rng.random_range(-0.4..1.0),
            width: rng.random_range(0.3..2.0),
        };
        let mut c = 0.0f64;
        for n in [400usize, 800, 1600] {
            let x = uniform_grid(-3.0, 3.0, n);
            let (fv, fp, fpp) = f.sample(&x).unwrap();
            let vol = FiberVolumeProfile::from_derivatives(&disc, &fv, &fp, &fpp).unwrap();
            let op = assemble_hollow(&x, &vol, eps).unwrap();
            let root: Vec<f64> = fv.iter().map(|v| v.sqrt()).collect();
            let r = op.apply(&root);
            let worst = r[1..r.len() - 1].iter().map(|v| v.abs()).fold(0.0, f64::max);
            c = c.max(worst / (eps * eps * op.h * op.h));
        }
        constants.push(c);
    }
    let cmax = constants.iter().copied().fold(0.0, f64::max);
    report(
        6,
        "hollow zero-mode identity",
        cmax.is_finite() && cmax <= 10.0,
        format!("residual <= eps² C h² with C = {constants:.3?} (max {cmax:.3} <= 10)"),
        t,
    );
}

#[test]
fn criterion_7_twist_effect_slow() {
    let t = Instant::now();
    let base = BaseInterval::new(0.0, 2.0).unwrap();
    let eps = 0.1;
    let spec = TwistSpec::Window { rate: 2.0, start: 0.5, end: 1.5, width: 0.1 };
    let opts = TwistedOptions { nx: 64, n_fibre: 48, ..Default::default() };
    let coarse = uniform_grid(0.0, 2.0, opts.nx);
    let full_shift = |shape: &CrossSectionShape| {
        let a = solve_twisted_tube(shape, &spec.sample(&coarse), eps, base, &opts).unwrap();
        let b = solve_twisted_tube(shape, &TwistProfile::zero(opts.nx + 1), eps, base, &opts).unwrap();
        assert!(a.ground() >= -1e-8 && b.ground() >= -1e-8);
        a.ground() - b.ground()
    };
    let ellipse = CrossSectionShape::ellipse(1.0, 0.5);
    let nu = full_shift(&ellipse);
    let disc_shift = full_shift(&CrossSectionShape::disc(1.0)).abs();

    let x = uniform_grid(0.0, 2.0, 4000);
    let frame = ParallelFrame::straight(x.clone()).unwrap();
    let fib = ScaledFibres::constant(x.len(), 1.0);
    let mode = solve_ground_mode(&ellipse, 64).unwrap();
    let tw = spec.sample(&x);
    let ground = |tw: Option<&TwistProfile>| {
        let op = assemble_massive(&frame, &mode, tw, &fib, eps, Alpha::One, true).unwrap();
        solve_1d(&op, 1).unwrap().eigenvalues[0]
    };
    let mu = ground(Some(&tw)) - ground(None);
    let dev = rel(nu, mu);
    report(
        7,
        "twist effect",
        nu > 0.0 && dev <= 0.25 && disc_shift < 1e-6,
        format!("full shift {nu:.4e} > 0, adiabatic {mu:.4e}, deviation {:.1}% <= 25%, disc shift {disc_shift:.1e} < 1e-6", 100.0 * dev),
        t,
    );
}

#[test]
fn criterion_8_sign_checks() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_vbend = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let d = rng.random_range(1..=2usize);
        let k = rng.random_range(1..=3usize);
        let kappas: Vec<Vec<f64>> = (0..d).map(|_| (0..k).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        worst_vbend = worst_vbend.max(PrincipalCurvatureSet::new(kappas).unwrap().vbend0());
    }
    let mut sphere_err = 0.0f64;
    for d in 1..=6usize {
        for r in [0.5f64, 1.0, 3.0] {
            let p = PrincipalCurvatureSet::new(vec![vec![1.0 / r]; d]).unwrap();
            let s = sphere_vbend0(d, r).unwrap();
            sphere_err = sphere_err.max((p.vbend0() - s).abs() / s.abs().max(1.0));
        }
    }
    // V_a over a matrix of bundles: curved, twisted, varying width, off-centre.
    let mut min_va = f64::INFINITY;
    let mut bundles = 0;
    let shapes = [
        CrossSectionShape::interval(1.0),
        CrossSectionShape::disc(1.0),
        CrossSectionShape::ellipse(1.0, 0.6),
        CrossSectionShape::Disc { radius: 1.0, center: [0.2, -0.1] },
    ];
    let modes: Vec<ModeData> = shapes.iter().map(|s| solve_ground_mode(s, 48).unwrap()).collect();
    let curves = [CurveSpec::line(4.0, 400).unwrap(), CurveSpec::circle(3.0, 4.0, 400).unwrap(), CurveSpec::helix(2.0, 1.0, 4.0, 400).unwrap()];
    for c in &curves {
        let frame = integrate_parallel_frame(c, initial_normal(c).unwrap()).unwrap();
        for _ in 0..3 {
            let f = Profile::Bump {
                base: rng.random_range(0.8..1.5),
                amp: rng.random_range(-0.3..0.5),
                width: rng.random_range(0.5..1.5),
            };
            let fib = ScaledFibres::from_profile(&f, &frame.x.iter().map(|v| v - 2.0).collect::<Vec<_>>()).unwrap();
            let tw = TwistSpec::Linear { rate: rng.random_range(-1.0..1.0) }.sample(&frame.x);
            for (shape, mode) in shapes.iter().zip(&modes) {
                let centred = center_of_mass(mode).iter().all(|v| v.abs() < 1e-9);
                let twist = (shape.codim() == 2 && centred).then_some(&tw);
                for alpha in [Alpha::One, Alpha::Two] {
                    let b = potential_bundle_massive(&frame, mode, twist, &fib, 0.1, alpha, centred).unwrap();
                    b.check().unwrap();
                    min_va = b.v_a.iter().copied().fold(min_va, f64::min);
                    bundles += 1;
                }
            }
        }
    }
    let pass = worst_vbend <= 0.0 && sphere_err <= 1e-14 && min_va >= 0.0;
    report(
        8,
        "sign checks",
        pass,
        format!(
            "max vbend0 {worst_vbend:.2e} <= 0 over 1000 sets, sphere error {sphere_err:.1e}, min V_a {min_va:.2e} >= 0 over {bundles} bundles"
        ),
        t,
    );
}

#[test]
fn criterion_9_full_operator_positivity() {
    let t = Instant::now();
    let base = BaseInterval::new(-3.0, 3.0).unwrap();
    let profiles = [
        ONE,
        Profile::Bump { base: 1.0, amp: 0.5, width: 0.5 },
        Profile::Constriction { outer: 2.0, depth: 1.0 },
        Profile::Sine { base: 1.0, amp: 0.3, freq: 1.0 },
    ];
    let mut lowest = f64::INFINITY;
    let mut count = 0;
    let mut take = |s: FullSpectrum| {
        lowest = s.eigenvalues.iter().copied().fold(lowest, f64::min);
        count += s.eigenvalues.len();
    };
    for f in &profiles {
        for eps in [0.05, 0.2, 0.5] {
            take(solve_strip(f, eps, base, 120, 24, 3).unwrap());
            for m in 0..3 {
                take(solve_axisym_tube(f, eps, m, base, 120, 24, 2).unwrap());
                take(solve_hollow_surface(f, eps, m, base, 600, 3).unwrap());
            }
        }
    }
    let tb = BaseInterval::new(0.0, 2.0).unwrap();
    let opts = TwistedOptions { nx: 16, n_fibre: 24, ..Default::default() };
    let x = uniform_grid(0.0, 2.0, 16);
    for shape in [CrossSectionShape::disc(1.0), CrossSectionShape::ellipse(1.0, 0.4)] {
        for rate in [0.0, 1.0, 4.0] {
            take(solve_twisted_tube(&shape, &TwistSpec::Linear { rate }.sample(&x), 0.2, tb, &opts).unwrap());
        }
    }
    report(
        9,
        "full-operator positivity",
        lowest >= -1e-8,
        format!("min eigenvalue {lowest:.4e} >= -1e-8 over {count} eigenvalues"),
        t,
    );
}
