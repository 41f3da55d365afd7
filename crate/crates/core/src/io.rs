//! Plot-ready CSV tables and loaders for tabulated inputs.
//!
//! Floats are written with 17 significant digits; metadata lines start with `#`.

use std::io::{Read, Write};

use crate::adiabatic::{PotentialBundle, Spectrum};
use crate::compare::SweepReport;
use crate::cross_section::ModeData;
use crate::error::{Result, WaveguideError};
use crate::geometry::{ParallelFrame, Vec3};
use crate::reference::FullSpectrum;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Scientific notation with 17 significant digits; negative zero prints as zero.
pub fn format_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(&self.header)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(Cell::render))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| WaveguideError::Io(e.to_string()))
    }
}

pub fn frame_table(frame: &ParallelFrame) -> Table {
    let mut t = Table::new(&[
        "x", "tau1", "tau2", "tau3", "e1_1", "e1_2", "e1_3", "e2_1", "e2_2", "e2_3", "kappa1", "kappa2",
    ]);
    for i in 0..frame.len() {
        let mut row: Vec<Cell> = vec![frame.x[i].into()];
        for v in [&frame.tau[i], &frame.e1[i], &frame.e2[i]] {
            row.extend(v.iter().map(|c| Cell::Num(*c)));
        }
        row.push(frame.kappa[i][0].into());
        row.push(frame.kappa[i][1].into());
        t.push(row);
    }
    t
}

pub fn bundle_table(b: &PotentialBundle) -> Table {
    let mut t = Table::new(&["x", "lambda0", "v_a", "v_bend_a", "v_hollow", "m", "pot"]).meta("eps", format_float(b.eps));
    for i in 0..b.len() {
        t.push(vec![
            b.x[i].into(),
            b.lambda0[i].into(),
            b.v_a[i].into(),
            b.v_bend_a[i].into(),
            b.v_hollow[i].into(),
            b.eps3_div_coeff[i].into(),
            b.eps3_pot[i].into(),
        ]);
    }
    t
}

pub fn spectrum_table(s: &Spectrum) -> Table {
    let mut t = Table::new(&["index", "eigenvalue", "residual"]);
    for (i, (v, r)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
        t.push(vec![i.into(), (*v).into(), (*r).into()]);
    }
    t
}

pub fn full_spectrum_table(s: &FullSpectrum) -> Table {
    let mut t = Table::new(&["kind", "eps", "m", "index", "eigenvalue", "residual", "nx", "nn"]);
    for (i, (v, r)) in s.eigenvalues.iter().zip(&s.residuals).enumerate() {
        t.push(vec![
            s.kind.to_string().into(),
            s.eps.into(),
            s.kind.angular_index().into(),
            i.into(),
            (*v).into(),
            (*r).into(),
            s.nx.into(),
            s.nn.into(),
        ]);
    }
    t
}

/// Scalar functionals of a fibre ground state as `name,value` rows.
pub fn mode_table(m: &ModeData) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in [
        ("lambda0", m.lambda0),
        ("l_norm_sq", m.l_norm_sq),
        ("com1", m.com[0]),
        ("com2", m.com[1]),
        ("c_f", m.c_f),
        ("s_l_cross", m.s_l_cross),
        ("volume", m.volume),
        ("residual", m.residual),
    ] {
        t.push(vec![k.into(), v.into()]);
    }
    t
}

/// Nodal values of a fibre ground state with their quadrature weights.
pub fn mode_nodes_table(m: &ModeData) -> Table {
    let mut t = Table::new(&["n1", "n2", "weight", "phi0"]).meta("codim", m.codim());
    for i in 0..m.phi0.len() {
        t.push(vec![m.points[i][0].into(), m.points[i][1].into(), m.weights[i].into(), m.phi0[i].into()]);
    }
    t
}

pub fn sweep_table(r: &SweepReport) -> Table {
    let mut t = Table::new(&["eps", "index", "mu", "nu", "error", "discretization", "excluded"])
        .meta("theory_order", r.theory_order)
        .meta("min_order", r.min_order);
    for f in &r.fits {
        let slope = f.slope().map_or_else(|| "nan".to_string(), format_float);
        t = t.meta(&format!("fitted_order_{}", f.index), slope);
    }
    for (i, eps) in r.eps_values.iter().enumerate() {
        for j in 0..r.fits.len() {
            let excluded = r.fits[j].excluded.contains(&i);
            t.push(vec![
                (*eps).into(),
                j.into(),
                r.mu[i][j].into(),
                r.nu[i][j].into(),
                r.paired_errors[i][j].into(),
                r.discretization[i][j].into(),
                usize::from(excluded).into(),
            ]);
        }
    }
    t
}

fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(r)
}

fn parse_err(e: csv::Error) -> WaveguideError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    WaveguideError::Parse { line, message: e.to_string() }
}

/// Numeric columns of a headed CSV, with `#` comment lines skipped.
pub fn read_numeric_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rd = csv_reader(r);
    let header: Vec<String> = rd.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(parse_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>().map_err(|_| WaveguideError::Parse {
                    line,
                    message: format!("not a number: {s:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(WaveguideError::Parse {
                line,
                message: format!("expected {} fields, got {}", header.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| WaveguideError::Parse { line: 1, message: format!("missing column {name:?}") })
}

/// Curve samples from columns `c1, c2, c3`.
pub fn read_curve<R: Read>(r: R) -> Result<Vec<Vec3>> {
    let (header, rows) = read_numeric_csv(r)?;
    let idx = [column(&header, "c1")?, column(&header, "c2")?, column(&header, "c3")?];
    Ok(rows.iter().map(|row| Vec3::new(row[idx[0]], row[idx[1]], row[idx[2]])).collect())
}

/// Twist samples from columns `x, omega`.
pub fn read_twist<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let (header, rows) = read_numeric_csv(r)?;
    let (ix, iw) = (column(&header, "x")?, column(&header, "omega")?);
    Ok(rows.iter().map(|row| (row[ix], row[iw])).unzip())
}

/// A 0/1 occupancy grid, one row per line; cells separated by commas or
/// whitespace. Blank lines and `#` comments are skipped.
pub fn read_mask<R: Read>(mut r: R) -> Result<Vec<Vec<bool>>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut grid: Vec<Vec<bool>> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(WaveguideError::Parse { line: i + 1, message: format!("mask cell must be 0 or 1, got {s:?}") }),
            })
            .collect::<Result<Vec<bool>>>()?;
        if let Some(first) = grid.first() {
            if first.len() != row.len() {
                return Err(WaveguideError::Parse {
                    line: i + 1,
                    message: format!("mask row has {} cells, expected {}", row.len(), first.len()),
                });
            }
        }
        grid.push(row);
    }
    if grid.is_empty() {
        return Err(WaveguideError::Parse { line: 0, message: "empty mask".into() });
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_17_digits() {
        let s = format_float(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn table_round_trip() {
        let mut t = Table::new(&["x", "omega"]).meta("hash", "abc");
        t.push(vec![0.0.into(), 1.5.into()]);
        t.push(vec![0.5.into(), (-2.0).into()]);
        let s = t.to_csv_string().unwrap();
        assert!(s.starts_with("# hash=abc\nx,omega\n"));
        let (x, w) = read_twist(s.as_bytes()).unwrap();
        assert_eq!(x, vec![0.0, 0.5]);
        assert_eq!(w, vec![1.5, -2.0]);
    }

    #[test]
    fn bad_number_reports_line() {
        let err = read_twist("x,omega\n0,1\n1,oops\n".as_bytes()).unwrap_err();
        assert!(matches!(err, WaveguideError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn mask_parsing() {
        let g = read_mask("# square\n0 1 0\n1,1,1\n\n0 1 0\n".as_bytes()).unwrap();
        assert_eq!(g.len(), 3);
        assert!(g[1].iter().all(|v| *v));
        assert!(read_mask("0 1\n1\n".as_bytes()).is_err());
        assert!(read_mask("0 2\n".as_bytes()).is_err());
    }
}
