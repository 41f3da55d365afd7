//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment. Keys are namespaced
//! (`curve.*`, `fiber.*`, `twist.*`, `reference.*`, `sweep.*`, `output.*`);
//! anything outside the known set is rejected with its line number.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use waveguide_core::adiabatic::Alpha;
use waveguide_core::compare::DEFAULT_EPS;
use waveguide_core::cross_section::CrossSectionShape;
use waveguide_core::geometry::{reparametrize_arclength, CurveKind, CurveSpec, TwistSpec, Vec3};
use waveguide_core::io::{read_curve, read_mask, read_twist};
use waveguide_core::profile::Profile;
use waveguide_core::reference::BaseInterval;

use crate::error::{CliError, CliResult};

pub const KEYS: &[&str] = &[
    "curve.kind",
    "curve.R",
    "curve.a",
    "curve.b",
    "curve.L",
    "curve.N",
    "curve.x0",
    "curve.e1",
    "curve.file",
    "fiber.shape",
    "fiber.halfwidth",
    "fiber.radius",
    "fiber.a",
    "fiber.b",
    "fiber.angle",
    "fiber.side",
    "fiber.center",
    "fiber.mask",
    "fiber.spacing",
    "fiber.grid",
    "fiber.centred",
    "fiber.profile",
    "fiber.profile.value",
    "fiber.profile.base",
    "fiber.profile.amp",
    "fiber.profile.width",
    "fiber.profile.outer",
    "fiber.profile.depth",
    "fiber.profile.scale",
    "fiber.profile.rate",
    "fiber.profile.freq",
    "fiber.profile.curv",
    "twist.profile",
    "twist.rate",
    "twist.start",
    "twist.end",
    "twist.width",
    "twist.file",
    "hollow",
    "eps",
    "alpha",
    "count",
    "reference.nx",
    "reference.nn",
    "reference.m",
    "reference.cap",
    "sweep.kind",
    "sweep.eps",
    "sweep.grids",
    "sweep.min_order",
    "sweep.window_c",
    "output.directory",
    "output.formats",
];

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: String,
}

/// Parsed but untyped entries, keyed in sorted order.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| CliError::config(line, format!("expected `key = value`, got `{content}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(CliError::config(line, format!("unknown key `{k}`")));
            }
            if v.is_empty() {
                return Err(CliError::config(line, format!("empty value for `{k}`")));
            }
            if let Some(prev) = entries.insert(k.to_string(), Entry { line, value: v.to_string() }) {
                return Err(CliError::config(line, format!("duplicate key `{k}` (first set on line {})", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    /// SHA-256 of the canonical `key=value` listing.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, e) in &self.entries {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(e.value.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        let v = self.text(key).unwrap_or("");
        CliError::config(self.line(key), format!("`{key}`: expected {what}, got `{v}`"))
    }

    fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some(x)),
                _ => Err(self.bad(key, "a finite number")),
            },
        }
    }

    fn f64_req(&self, key: &str, ctx: &str) -> CliResult<f64> {
        self.f64(key)?.ok_or_else(|| CliError::Missing(format!("`{key}` is required for {ctx}")))
    }

    fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| self.bad(key, "a non-negative integer")),
        }
    }

    fn bool(&self, key: &str) -> CliResult<Option<bool>> {
        match self.text(key) {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(_) => Err(self.bad(key, "`true` or `false`")),
        }
    }

    fn list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.text(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .map(Some)
                .ok_or_else(|| self.bad(key, "a comma-separated list of numbers")),
        }
    }

    fn path(&self, key: &str, dir: &Path) -> Option<PathBuf> {
        self.text(key).map(|v| dir.join(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TwistSource {
    None,
    Spec(TwistSpec),
    /// `(x, ω)` samples read from a file.
    Samples(Vec<f64>, Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Strip,
    Hollow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub eps: Vec<f64>,
    /// `(nx, nn)` per level; `nn` is unused for hollow sweeps.
    pub grids: Vec<(usize, usize)>,
    pub min_order: f64,
    pub window_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConfig {
    pub nx: usize,
    pub nn: usize,
    pub m: u32,
    pub cap: usize,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub hash: String,
    pub curve: CurveSpec,
    pub curve_is_line: bool,
    pub x0: f64,
    pub e1: Option<Vec3>,
    pub shape: CrossSectionShape,
    pub fibre_grid: usize,
    pub centred: bool,
    pub profile: Profile,
    pub twist: TwistSource,
    pub hollow: bool,
    pub eps: Option<f64>,
    pub alpha: Alpha,
    pub count: usize,
    pub reference: ReferenceConfig,
    pub sweep: Option<SweepConfig>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_text(&text, dir)
    }

    /// Parses and validates everything up front; relative file paths resolve against `dir`.
    pub fn from_text(text: &str, dir: &Path) -> CliResult<Self> {
        let raw = RawConfig::parse(text)?;
        Self::from_raw(&raw, dir)
    }

    pub fn from_raw(raw: &RawConfig, dir: &Path) -> CliResult<Self> {
        let (curve, curve_is_line) = curve(raw, dir)?;
        let e1 = match raw.list("curve.e1")? {
            None => None,
            Some(v) if v.len() == 3 && v.iter().any(|c| *c != 0.0) => Some(Vec3::new(v[0], v[1], v[2])),
            Some(_) => return Err(raw.bad("curve.e1", "three components, not all zero")),
        };
        let shape = shape(raw, dir)?;
        let profile = profile(raw)?;
        let twist = twist(raw, dir)?;
        let alpha = match raw.usize("alpha")?.unwrap_or(1) {
            1 => Alpha::One,
            2 => Alpha::Two,
            _ => return Err(raw.bad("alpha", "1 or 2")),
        };
        let eps = raw.f64("eps")?;
        if eps.is_some_and(|e| !(e > 0.0)) {
            return Err(raw.bad("eps", "a positive number"));
        }
        let count = raw.usize("count")?.unwrap_or(1);
        if count == 0 {
            return Err(raw.bad("count", "at least 1"));
        }
        let reference = ReferenceConfig {
            nx: raw.usize("reference.nx")?.unwrap_or(200),
            nn: raw.usize("reference.nn")?.unwrap_or(40),
            m: match raw.usize("reference.m")?.unwrap_or(0) {
                m if m <= u32::MAX as usize => m as u32,
                _ => return Err(raw.bad("reference.m", "a small integer")),
            },
            cap: raw.usize("reference.cap")?.unwrap_or(2_000_000),
        };
        let sweep = sweep(raw)?;
        if let Some(f) = raw.text("output.formats") {
            if f.split(',').any(|t| t.trim() != "csv") {
                return Err(raw.bad("output.formats", "`csv`"));
            }
        }
        let fibre_grid = raw.usize("fiber.grid")?.unwrap_or(128);
        Ok(Self {
            hash: raw.hash(),
            curve,
            curve_is_line,
            x0: raw.f64("curve.x0")?.unwrap_or(0.0),
            e1,
            shape,
            fibre_grid,
            centred: raw.bool("fiber.centred")?.unwrap_or(true),
            profile,
            twist,
            hollow: raw.bool("hollow")?.unwrap_or(false),
            eps,
            alpha,
            count,
            reference,
            sweep,
            output_dir: PathBuf::from(raw.text("output.directory").unwrap_or("out")),
        })
    }

    pub fn base(&self) -> CliResult<BaseInterval> {
        BaseInterval::new(self.x0, self.x0 + self.curve.length)
            .map_err(|e| CliError::Missing(format!("base interval: {e}")))
    }
}

fn curve(raw: &RawConfig, dir: &Path) -> CliResult<(CurveSpec, bool)> {
    let kind = raw.text("curve.kind").unwrap_or("line");
    let at = |e: waveguide_core::WaveguideError| CliError::config(raw.line("curve.kind"), e.to_string());
    if kind == "file" {
        let path = raw.path("curve.file", dir).ok_or_else(|| CliError::Missing("`curve.file` is required for curve.kind = file".into()))?;
        let pts = read_curve(File::open(&path)?).map_err(|e| CliError::config(raw.line("curve.file"), e.to_string()))?;
        let c = CurveSpec::sampled(pts).and_then(|c| reparametrize_arclength(&c)).map_err(at)?;
        return Ok((c, false));
    }
    let length = raw.f64_req("curve.L", "the curve")?;
    let n = raw.usize("curve.N")?.unwrap_or(400);
    let k = match kind {
        "line" => CurveKind::Line,
        "circle" => CurveKind::Circle { radius: raw.f64_req("curve.R", "curve.kind = circle")? },
        "helix" => CurveKind::Helix {
            a: raw.f64_req("curve.a", "curve.kind = helix")?,
            b: raw.f64_req("curve.b", "curve.kind = helix")?,
        },
        _ => return Err(raw.bad("curve.kind", "line, circle, helix or file")),
    };
    let is_line = matches!(k, CurveKind::Line);
    Ok((CurveSpec::new(k, length, n).map_err(at)?, is_line))
}

fn shape(raw: &RawConfig, dir: &Path) -> CliResult<CrossSectionShape> {
    let kind = raw.text("fiber.shape").unwrap_or("interval");
    let center = match raw.list("fiber.center")? {
        None => [0.0, 0.0],
        Some(v) if v.len() == 2 => [v[0], v[1]],
        Some(_) => return Err(raw.bad("fiber.center", "two components")),
    };
    let need = |k: &str| raw.f64_req(k, &format!("fiber.shape = {kind}"));
    let s = match kind {
        "interval" => CrossSectionShape::Interval { halfwidth: raw.f64("fiber.halfwidth")?.unwrap_or(1.0), center: center[0] },
        "disc" => CrossSectionShape::Disc { radius: raw.f64("fiber.radius")?.unwrap_or(1.0), center },
        "ellipse" => CrossSectionShape::Ellipse {
            a: need("fiber.a")?,
            b: need("fiber.b")?,
            angle: raw.f64("fiber.angle")?.unwrap_or(0.0),
            center,
        },
        "square" => {
            let side = need("fiber.side")?;
            let n = raw.usize("fiber.grid")?.unwrap_or(128);
            CrossSectionShape::square_mask(side, n)
        }
        "mask" => {
            let path = raw.path("fiber.mask", dir).ok_or_else(|| CliError::Missing("`fiber.mask` is required for fiber.shape = mask".into()))?;
            let grid = read_mask(File::open(&path)?).map_err(|e| CliError::config(raw.line("fiber.mask"), e.to_string()))?;
            CrossSectionShape::Mask { grid, spacing: need("fiber.spacing")?, center }
        }
        _ => return Err(raw.bad("fiber.shape", "interval, disc, ellipse, square or mask")),
    };
    s.validate().map_err(|e| CliError::config(raw.line("fiber.shape"), e.to_string()))?;
    Ok(s)
}

fn profile(raw: &RawConfig) -> CliResult<Profile> {
    let kind = raw.text("fiber.profile").unwrap_or("constant");
    let ctx = format!("fiber.profile = {kind}");
    let need = |k: &str| raw.f64_req(&format!("fiber.profile.{k}"), &ctx);
    let p = match kind {
        "constant" => Profile::Constant { value: raw.f64("fiber.profile.value")?.unwrap_or(1.0) },
        "bump" => Profile::Bump { base: need("base")?, amp: need("amp")?, width: need("width")? },
        "constriction" => Profile::Constriction { outer: need("outer")?, depth: need("depth")? },
        "exponential" => Profile::Exponential { scale: need("scale")?, rate: need("rate")? },
        "sine" => Profile::Sine { base: need("base")?, amp: need("amp")?, freq: need("freq")? },
        "quadratic" => Profile::Quadratic { base: need("base")?, curv: need("curv")? },
        _ => return Err(raw.bad("fiber.profile", "constant, bump, constriction, exponential, sine or quadratic")),
    };
    p.validate().map_err(|e| CliError::config(raw.line("fiber.profile"), e.to_string()))?;
    Ok(p)
}

fn twist(raw: &RawConfig, dir: &Path) -> CliResult<TwistSource> {
    let kind = raw.text("twist.profile").unwrap_or("none");
    let ctx = format!("twist.profile = {kind}");
    let need = |k: &str| raw.f64_req(&format!("twist.{k}"), &ctx);
    Ok(match kind {
        "none" => TwistSource::None,
        "linear" => TwistSource::Spec(TwistSpec::Linear { rate: need("rate")? }),
        "window" => {
            let width = need("width")?;
            if !(width > 0.0) {
                return Err(raw.bad("twist.width", "a positive number"));
            }
            TwistSource::Spec(TwistSpec::Window { rate: need("rate")?, start: need("start")?, end: need("end")?, width })
        }
        "file" => {
            let path = raw.path("twist.file", dir).ok_or_else(|| CliError::Missing("`twist.file` is required for twist.profile = file".into()))?;
            let (x, w) = read_twist(File::open(&path)?).map_err(|e| CliError::config(raw.line("twist.file"), e.to_string()))?;
            TwistSource::Samples(x, w)
        }
        _ => return Err(raw.bad("twist.profile", "none, linear, window or file")),
    })
}

fn sweep(raw: &RawConfig) -> CliResult<Option<SweepConfig>> {
    let Some(kind) = raw.text("sweep.kind") else {
        for k in ["sweep.eps", "sweep.grids", "sweep.min_order", "sweep.window_c"] {
            if raw.contains(k) {
                return Err(CliError::config(raw.line(k), format!("`{k}` needs `sweep.kind`")));
            }
        }
        return Ok(None);
    };
    let kind = match kind {
        "strip" => SweepKind::Strip,
        "hollow" => SweepKind::Hollow,
        _ => return Err(raw.bad("sweep.kind", "strip or hollow")),
    };
    let eps = raw.list("sweep.eps")?.unwrap_or_else(|| DEFAULT_EPS.to_vec());
    if eps.len() < 3 || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(raw.bad("sweep.eps", "at least three positive values"));
    }
    let grids = match raw.text("sweep.grids") {
        None => match kind {
            SweepKind::Strip => vec![(400, 40), (800, 80), (1600, 160)],
            SweepKind::Hollow => vec![(20000, 0), (40000, 0)],
        },
        Some(text) => {
            let parse = |t: &str| -> Option<(usize, usize)> {
                match t.trim().split_once('x') {
                    Some((a, b)) => Some((a.trim().parse().ok()?, b.trim().parse().ok()?)),
                    None => Some((t.trim().parse().ok()?, 0)),
                }
            };
            let g: Option<Vec<_>> = text.split(',').map(parse).collect();
            let g = g.ok_or_else(|| raw.bad("sweep.grids", "entries `NXxNN` (strip) or `NX` (hollow)"))?;
            let ok = g.len() >= 2
                && match kind {
                    SweepKind::Strip => g.iter().all(|&(a, b)| a > 0 && b > 0),
                    SweepKind::Hollow => g.iter().all(|&(a, b)| a > 0 && b == 0),
                };
            if !ok {
                return Err(raw.bad("sweep.grids", "at least two levels matching the sweep kind"));
            }
            g
        }
    };
    Ok(Some(SweepConfig {
        kind,
        eps,
        grids,
        min_order: raw.f64("sweep.min_order")?.unwrap_or(2.5),
        window_c: raw.f64("sweep.window_c")?,
    }))
}
