//! Subcommand implementations. Every emitted file carries the config hash.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use waveguide_core::adiabatic::{assemble_hollow, assemble_massive, solve_1d, AdiabaticOperator, ScaledFibres, Spectrum};
use waveguide_core::compare::{pair_and_fit, window_count, HollowSweep, StripSweep, SweepPoint, SweepReport, DEFAULT_EPS};
use waveguide_core::cross_section::{center_of_mass, solve_ground_mode, CrossSectionShape, FiberVolumeProfile, ModeData};
use waveguide_core::geometry::{initial_normal, integrate_parallel_frame, ParallelFrame, TwistProfile};
use waveguide_core::io::{
    bundle_table, format_float, frame_table, full_spectrum_table, mode_nodes_table, mode_table, spectrum_table, sweep_table, Table,
};
use waveguide_core::profile::{uniform_grid, Profile};
use waveguide_core::reference::{
    solve_axisym_tube, solve_hollow_surface, solve_strip, solve_twisted_tube, FullSpectrum, TwistedOptions,
};

use crate::config::{RunConfig, SweepKind, TwistSource};
use crate::error::{CliError, CliResult, Context};

/// Largest centre-of-mass offset left after recentring.
const CENTRE_TOL: f64 = 1e-12;

pub fn write_table(table: Table, hash: &str, dir: &Path, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let w = BufWriter::new(File::create(&path)?);
    table.meta("config_hash", hash).write_csv(w).context(name)?;
    Ok(path)
}

pub fn frame(cfg: &RunConfig) -> CliResult<ParallelFrame> {
    let e1 = match cfg.e1 {
        Some(v) => v,
        None => initial_normal(&cfg.curve).context("geometry")?,
    };
    Ok(integrate_parallel_frame(&cfg.curve, e1).context("geometry")?.with_origin(cfg.x0))
}

fn with_center(shape: &CrossSectionShape, c: [f64; 2]) -> CrossSectionShape {
    let mut s = shape.clone();
    match &mut s {
        CrossSectionShape::Interval { center, .. } => *center = c[0],
        CrossSectionShape::Disc { center, .. }
        | CrossSectionShape::Ellipse { center, .. }
        | CrossSectionShape::Mask { center, .. } => *center = c,
    }
    s
}

fn shape_center(shape: &CrossSectionShape) -> [f64; 2] {
    match shape {
        CrossSectionShape::Interval { center, .. } => [*center, 0.0],
        CrossSectionShape::Disc { center, .. }
        | CrossSectionShape::Ellipse { center, .. }
        | CrossSectionShape::Mask { center, .. } => *center,
    }
}

/// Effective fibre shape: with `fiber.centred = true` it is translated so the
/// ground-state centre of mass sits on the curve.
pub fn fibre_shape(cfg: &RunConfig) -> CliResult<CrossSectionShape> {
    if !cfg.centred {
        return Ok(cfg.shape.clone());
    }
    let m = solve_ground_mode(&cfg.shape, cfg.fibre_grid).context("cross_section")?;
    let c = center_of_mass(&m);
    if c[0].abs().max(c[1].abs()) <= CENTRE_TOL {
        return Ok(cfg.shape.clone());
    }
    let s = shape_center(&cfg.shape);
    Ok(with_center(&cfg.shape, [s[0] - c[0], s[1] - c[1]]))
}

pub fn mode(cfg: &RunConfig) -> CliResult<ModeData> {
    let shape = fibre_shape(cfg)?;
    let mut m = solve_ground_mode(&shape, cfg.fibre_grid).context("cross_section")?;
    if cfg.centred {
        // Residual offset after one translation is at round-off level.
        let c = center_of_mass(&m);
        if c[0].abs().max(c[1].abs()) > 1e-9 {
            return Err(CliError::Numerical {
                context: "cross_section".into(),
                source: waveguide_core::WaveguideError::InvalidInput(format!("recentring left offset {c:?}")),
            });
        }
        m.com = [0.0, 0.0];
    }
    Ok(m)
}

pub fn cmd_frame(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let f = frame(cfg)?;
    Ok(vec![write_table(frame_table(&f), &cfg.hash, out, "frame.csv")?])
}

pub fn cmd_mode(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let m = mode(cfg)?;
    Ok(vec![
        write_table(mode_table(&m), &cfg.hash, out, "mode.csv")?,
        write_table(mode_nodes_table(&m), &cfg.hash, out, "mode_nodes.csv")?,
    ])
}

fn twist_on(cfg: &RunConfig, x: &[f64]) -> CliResult<Option<TwistProfile>> {
    match &cfg.twist {
        TwistSource::None => Ok(None),
        TwistSource::Spec(s) => Ok(Some(s.sample(x))),
        TwistSource::Samples(xs, w) => {
            let tol = 1e-9 * (x[x.len() - 1] - x[0]).abs().max(1.0);
            if xs.len() != x.len() || xs.iter().zip(x).any(|(a, b)| (a - b).abs() > tol) {
                return Err(CliError::Missing(format!(
                    "twist.file must be sampled on the {} frame nodes starting at curve.x0",
                    x.len()
                )));
            }
            Ok(Some(TwistProfile::from_samples(w.clone(), x[1] - x[0]).context("twist")?))
        }
    }
}

pub fn adiabatic_operator(cfg: &RunConfig, eps: f64) -> CliResult<AdiabaticOperator> {
    let fr = frame(cfg)?;
    let shape = fibre_shape(cfg)?;
    if cfg.hollow {
        let (f, fp, fpp) = cfg.profile.sample(&fr.x).context("profile")?;
        let fv = FiberVolumeProfile::from_derivatives(&shape, &f, &fp, &fpp).context("cross_section")?;
        return assemble_hollow(&fr.x, &fv, eps).context("adiabatic");
    }
    let m = mode(cfg)?;
    let fibres = ScaledFibres::from_profile(&cfg.profile, &fr.x).context("profile")?;
    let tw = twist_on(cfg, &fr.x)?;
    assemble_massive(&fr, &m, tw.as_ref(), &fibres, eps, cfg.alpha, cfg.centred).context("adiabatic")
}

/// The direct solver matching the configuration, or the reason there is none.
pub fn reference(cfg: &RunConfig, eps: f64) -> CliResult<Result<FullSpectrum, &'static str>> {
    if !cfg.curve_is_line {
        return Ok(Err("reference solvers need a straight centreline"));
    }
    let base = cfg.base()?;
    let r = cfg.reference;
    let shape = fibre_shape(cfg)?;
    let unit_disc = matches!(shape, CrossSectionShape::Disc { radius, center } if radius == 1.0 && center == [0.0, 0.0]);
    if cfg.hollow {
        if !unit_disc {
            return Ok(Err("hollow reference needs a unit circle fibre"));
        }
        return Ok(Ok(solve_hollow_surface(&cfg.profile, eps, r.m, base, r.nx, cfg.count).context("reference")?));
    }
    let twisted = !matches!(cfg.twist, TwistSource::None);
    if !twisted {
        return Ok(match shape {
            CrossSectionShape::Interval { halfwidth, center } if halfwidth == 1.0 && center == 0.0 => {
                Ok(solve_strip(&cfg.profile, eps, base, r.nx, r.nn, cfg.count).context("reference")?)
            }
            _ if unit_disc => Ok(solve_axisym_tube(&cfg.profile, eps, r.m, base, r.nx, r.nn, cfg.count).context("reference")?),
            _ => Err("no reference solver for this fibre"),
        });
    }
    let (TwistSource::Spec(spec), Profile::Constant { value }) = (&cfg.twist, &cfg.profile) else {
        return Ok(Err("twisted reference needs an analytic twist and a constant profile"));
    };
    let scaled = match shape {
        CrossSectionShape::Disc { radius, center } if center == [0.0, 0.0] => CrossSectionShape::Disc { radius: radius * value, center },
        CrossSectionShape::Ellipse { a, b, angle, center } if center == [0.0, 0.0] => {
            CrossSectionShape::Ellipse { a: a * value, b: b * value, angle, center }
        }
        _ => return Ok(Err("twisted reference needs a centred disc or ellipse")),
    };
    let omega = spec.sample(&uniform_grid(base.x0, base.x1, r.nx));
    let opts = TwistedOptions { nx: r.nx, n_fibre: r.nn, cap: r.cap, ..Default::default() };
    Ok(Ok(solve_twisted_tube(&scaled, &omega, eps, base, &opts).context("reference")?))
}

pub fn cmd_spectrum(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let eps = cfg.eps.ok_or_else(|| CliError::Missing("`eps` is required for spectrum".into()))?;
    let op = adiabatic_operator(cfg, eps)?;
    let spec: Spectrum = solve_1d(&op, cfg.count).context("adiabatic")?;
    let mut files = vec![
        write_table(bundle_table(&op.bundle), &cfg.hash, out, "potentials.csv")?,
        write_table(spectrum_table(&spec).meta("eps", format_float(eps)), &cfg.hash, out, "adiabatic_spectrum.csv")?,
    ];
    match reference(cfg, eps)? {
        Ok(full) => {
            files.push(write_table(full_spectrum_table(&full), &cfg.hash, out, "full_spectrum.csv")?);
        }
        Err(why) => eprintln!("full spectrum skipped: {why}"),
    }
    Ok(files)
}

/// Sweep points of the configured kind, in input order.
pub fn sweep_points(cfg: &RunConfig) -> CliResult<(Vec<SweepPoint>, f64)> {
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Missing("`sweep.kind` is required for sweep".into()))?;
    let base = cfg.base()?;
    let min_order = sw.min_order;
    let pts: waveguide_core::Result<Vec<SweepPoint>> = match sw.kind {
        SweepKind::Strip => {
            let s = StripSweep {
                profile: cfg.profile.clone(),
                base,
                eps_values: sw.eps.clone(),
                grids: sw.grids.clone(),
                count: cfg.count,
                min_order,
            };
            sw.eps.par_iter().map(|&e| s.point(e)).collect()
        }
        SweepKind::Hollow => {
            let s = HollowSweep {
                profile: cfg.profile.clone(),
                base,
                eps_values: sw.eps.clone(),
                grids: sw.grids.iter().map(|g| g.0).collect(),
                count: cfg.count,
                min_order,
            };
            sw.eps.par_iter().map(|&e| s.point(e)).collect()
        }
    };
    Ok((pts.context("sweep")?, min_order))
}

/// Bottom of the effective potential, the base of the spectral window.
fn window_floor(cfg: &RunConfig, kind: SweepKind) -> CliResult<f64> {
    if kind == SweepKind::Hollow {
        return Ok(0.0);
    }
    let base = cfg.base()?;
    let (f, _, _) = cfg.profile.sample(&uniform_grid(base.x0, base.x1, 2000)).context("profile")?;
    let fmax = f.iter().copied().fold(0.0, f64::max);
    Ok(std::f64::consts::PI.powi(2) / (4.0 * fmax * fmax))
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> CliResult<(SweepReport, Vec<PathBuf>)> {
    let (mut pts, min_order) = sweep_points(cfg)?;
    let sw = cfg.sweep.as_ref().expect("checked in sweep_points");
    if let Some(c) = sw.window_c {
        let n = window_count(&pts, window_floor(cfg, sw.kind)?, c, 1.0);
        if n == 0 {
            return Err(CliError::Acceptance(format!("no eigenvalue inside the window with C = {c}")));
        }
        pts = pts.iter().map(|p| p.truncated(n)).collect();
    }
    let mut report = pair_and_fit(&pts, 3.0, min_order).context("sweep")?;
    report.config_hash = cfg.hash.clone();
    report.check_discretization().context("sweep")?;
    let files = write_report(&report, &cfg.hash, out, "sweep")?;
    Ok((report, files))
}

fn write_report(report: &SweepReport, hash: &str, out: &Path, stem: &str) -> CliResult<Vec<PathBuf>> {
    let csv = write_table(sweep_table(report), hash, out, &format!("{stem}.csv"))?;
    let txt = out.join(format!("{stem}_summary.txt"));
    std::fs::write(&txt, format!("# config_hash={hash}\n{}", report.summary()))?;
    Ok(vec![csv, txt])
}

/// Built-in data with an exact `ε³` gap; the fitted order must be 3.
pub fn selftest_report() -> CliResult<SweepReport> {
    let pts: Vec<SweepPoint> = DEFAULT_EPS
        .iter()
        .map(|&e| {
            let mu: Vec<f64> = (0..3).map(|j| 1.0 + j as f64 + e * e).collect();
            let nu = mu.iter().enumerate().map(|(j, m)| m + (j + 1) as f64 * e.powi(3)).collect();
            SweepPoint::exact(e, mu, nu)
        })
        .collect();
    let mut r = pair_and_fit(&pts, 3.0, 2.5).context("selftest")?;
    r.config_hash = "selftest".into();
    Ok(r)
}

pub fn cmd_selftest(out: &Path) -> CliResult<(SweepReport, Vec<PathBuf>)> {
    let r = selftest_report()?;
    let files = write_report(&r, "selftest", out, "selftest")?;
    let exact = r.fits.iter().all(|f| f.slope().is_some_and(|s| (s - 3.0).abs() < 1e-9));
    if !exact {
        return Err(CliError::Acceptance("selftest slope differs from 3".into()));
    }
    Ok((r, files))
}
