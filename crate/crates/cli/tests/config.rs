use std::path::Path;

use waveguide_cli::config::{RawConfig, SweepKind, TwistSource};
use waveguide_cli::{CliError, RunConfig};
use waveguide_core::cross_section::CrossSectionShape;
use waveguide_core::profile::Profile;

fn load(text: &str) -> Result<RunConfig, CliError> {
    RunConfig::from_text(text, Path::new("."))
}

fn config_line(e: CliError) -> usize {
    match e {
        CliError::Config { line, .. } => line,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn unknown_key_reports_its_line() {
    let e = load("curve.L = 2\n# comment\n\nfiber.radius = 1\nfibre.radius = 1\n").unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert_eq!(config_line(e), 5);
}

#[test]
fn malformed_values_report_their_line() {
    assert_eq!(config_line(load("curve.L = 2\ncurve.N = many\n").unwrap_err()), 2);
    assert_eq!(config_line(load("curve.L = 2\nhollow = yes\n").unwrap_err()), 2);
    assert_eq!(config_line(load("curve.L = 2\n\nalpha = 3\n").unwrap_err()), 3);
    assert_eq!(config_line(load("curve.L = 2\ncurve.L = 3\n").unwrap_err()), 2);
    assert_eq!(config_line(load("curve.L\n").unwrap_err()), 1);
    assert_eq!(config_line(load("curve.L = 2\nfiber.shape = disc\nfiber.radius = -1\n").unwrap_err()), 2);
    assert_eq!(config_line(load("curve.L = 2\nsweep.eps = 0.1, 0.05\n").unwrap_err()), 2);
}

#[test]
fn missing_required_keys_are_configuration_errors() {
    let e = load("curve.kind = circle\ncurve.L = 2\n").unwrap_err();
    assert!(matches!(e, CliError::Missing(_)));
    assert_eq!(e.exit_code(), 3);
    assert!(load("fiber.shape = ellipse\ncurve.L = 1\nfiber.a = 1\n").is_err());
}

#[test]
fn defaults_and_typed_values() {
    let c = load(
        "curve.L = 8 # base length\ncurve.x0 = -4\nfiber.profile = bump\nfiber.profile.base = 1\n\
         fiber.profile.amp = 0.5\nfiber.profile.width = 0.5\ntwist.profile = linear\ntwist.rate = 0.3\n\
         sweep.kind = strip\nsweep.grids = 100x10, 200x20\n",
    )
    .unwrap();
    assert_eq!(c.shape, CrossSectionShape::interval(1.0));
    assert_eq!(c.profile, Profile::Bump { base: 1.0, amp: 0.5, width: 0.5 });
    assert!(matches!(c.twist, TwistSource::Spec(_)));
    assert!(c.centred && !c.hollow && c.curve_is_line);
    let s = c.sweep.clone().unwrap();
    assert_eq!(s.kind, SweepKind::Strip);
    assert_eq!(s.grids, vec![(100, 10), (200, 20)]);
    assert_eq!(s.eps.len(), 5);
    let b = c.base().unwrap();
    assert_eq!((b.x0, b.x1), (-4.0, 4.0));
}

#[test]
fn hash_ignores_comments_and_ordering() {
    let a = RawConfig::parse("curve.L = 2\nfiber.shape = disc\n").unwrap().hash();
    let b = RawConfig::parse("# header\nfiber.shape=disc   # trailing\n\ncurve.L=2\n").unwrap().hash();
    let c = RawConfig::parse("curve.L = 3\nfiber.shape = disc\n").unwrap().hash();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 64);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "cfg") {
            RunConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}
