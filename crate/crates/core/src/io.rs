//! Plain-text formats for supply-rate triples, scheduling families and
//! certified controllers. Numbers are written with 17 significant digits so
//! files round-trip exactly. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::certification::LtiSystem;
use crate::error::{Error, Result};
use crate::linalg::fmt_g17;
use crate::qsr::QsrTriple;
use crate::scheduling::SchedulingFamily;
use crate::synthesis::Subcontroller;

/// Tolerance for recovering a uniform grid from a family file.
const GRID_TOL: f64 = 1e-9;

fn write_row(out: &mut String, vals: impl Iterator<Item = f64>) {
    let row: Vec<String> = vals.map(fmt_g17).collect();
    out.push_str(&row.join(" "));
    out.push('\n');
}

/// `<name> <rows> <cols>` followed by one line per row.
pub fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        write_row(out, m.row(r).iter().copied());
    }
}

/// Line cursor with 1-based line numbers for error messages.
struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let line = self.lines.get(self.pos.saturating_sub(1)).map_or(0, |(n, _)| *n);
        Error::Parse { line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        let l = self.lines.get(self.pos).map(|(_, l)| *l).ok_or_else(|| Error::Parse {
            line: self.lines.last().map_or(0, |(n, _)| *n),
            msg: "unexpected end of file".into(),
        })?;
        self.pos += 1;
        Ok(l)
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|(_, l)| *l)
    }

    fn numbers(&mut self, expect: usize) -> Result<Vec<f64>> {
        let l = self.next()?;
        let vals = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(format!("invalid number '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != expect {
            return Err(self.err(format!("expected {expect} numbers, found {}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(self.err("non-finite value"));
        }
        Ok(vals)
    }

    fn matrix(&mut self, name: &str) -> Result<DMatrix<f64>> {
        let head = self.next()?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != name {
            return Err(self.err(format!("expected '{name} <rows> <cols>', found '{head}'")));
        }
        let dims = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| self.err(format!("invalid dimension '{s}'")))
        };
        let (r, c) = (dims(parts[1])?, dims(parts[2])?);
        let mut data = Vec::with_capacity(r * c);
        for _ in 0..r {
            data.extend(self.numbers(c)?);
        }
        Ok(DMatrix::from_row_slice(r, c, &data))
    }

    fn scalar(&mut self, name: &str) -> Result<f64> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.err(format!("expected '{name} <value>', found '{l}'")));
        }
        let v = parts
            .next()
            .ok_or_else(|| self.err(format!("missing value for {name}")))?;
        v.parse::<f64>().map_err(|_| self.err(format!("invalid number '{v}'")))
    }
}

/// Parses `key=value` fields of a header line that starts with `magic`.
fn header<'a>(lines: &mut Lines<'a>, magic: &str) -> Result<Vec<(&'a str, &'a str)>> {
    let l = lines.next()?;
    let rest = l
        .strip_prefix(magic)
        .ok_or_else(|| lines.err(format!("expected header '{magic} ...', found '{l}'")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| lines.err(format!("malformed header field '{kv}'")))
        })
        .collect()
}

fn field<T: std::str::FromStr>(lines: &Lines<'_>, fields: &[(&str, &str)], key: &str) -> Result<T> {
    let v = fields
        .iter()
        .find(|(k, _)| *k == key)
        .ok_or_else(|| lines.err(format!("header is missing '{key}'")))?
        .1;
    v.parse()
        .map_err(|_| lines.err(format!("invalid value '{v}' for '{key}'")))
}

pub fn write_triple(t: &QsrTriple) -> String {
    let mut out = format!("qsr-triple v1 n_y={} n_u={}\n", t.n_y(), t.n_u());
    write_matrix(&mut out, "Q", t.q());
    write_matrix(&mut out, "S", t.s());
    write_matrix(&mut out, "R", t.r());
    out
}

pub fn read_triple(text: &str) -> Result<QsrTriple> {
    let mut lines = Lines::new(text);
    let fields = header(&mut lines, "qsr-triple v1")?;
    let n_y: usize = field(&lines, &fields, "n_y")?;
    let n_u: usize = field(&lines, &fields, "n_u")?;
    let q = lines.matrix("Q")?;
    let s = lines.matrix("S")?;
    let r = lines.matrix("R")?;
    if q.shape() != (n_y, n_y) || s.shape() != (n_y, n_u) || r.shape() != (n_u, n_u) {
        return Err(lines.err("matrix sizes disagree with the header"));
    }
    QsrTriple::new(q, s, r)
}

/// Detects a uniform grid starting at 0 and returns its step.
fn uniform_step(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Ok(1.0);
    }
    let dt = grid[1] - grid[0];
    let uniform = grid[0].abs() <= GRID_TOL * dt
        && grid
            .iter()
            .enumerate()
            .all(|(k, t)| (t - k as f64 * dt).abs() <= GRID_TOL * dt.max(1.0) * (k as f64).max(1.0));
    if uniform {
        Ok(dt)
    } else {
        Err(Error::param("family files need a uniform grid starting at t = 0"))
    }
}

pub fn write_family(f: &SchedulingFamily) -> Result<String> {
    let dt = uniform_step(f.grid())?;
    let mut out = format!(
        "gs-family v1 i={} n_u={} n_y={} dt={}\n",
        f.index(),
        f.n_u(),
        f.n_y(),
        fmt_g17(dt)
    );
    for (pu, py) in f.phi_u().iter().zip(f.phi_y()) {
        let row_major = |m: &DMatrix<f64>| m.transpose().iter().copied().collect::<Vec<_>>();
        write_row(&mut out, row_major(pu).into_iter().chain(row_major(py)));
    }
    Ok(out)
}

pub fn read_family(text: &str) -> Result<SchedulingFamily> {
    let mut lines = Lines::new(text);
    let fields = header(&mut lines, "gs-family v1")?;
    let index: usize = field(&lines, &fields, "i")?;
    let n_u: usize = field(&lines, &fields, "n_u")?;
    let n_y: usize = field(&lines, &fields, "n_y")?;
    let dt: f64 = field(&lines, &fields, "dt")?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(lines.err("dt must be positive"));
    }
    let mut phi_u = Vec::new();
    let mut phi_y = Vec::new();
    while lines.peek().is_some() {
        let v = lines.numbers(n_u * n_u + n_y * n_y)?;
        phi_u.push(DMatrix::from_row_slice(n_u, n_u, &v[..n_u * n_u]));
        phi_y.push(DMatrix::from_row_slice(n_y, n_y, &v[n_u * n_u..]));
    }
    if phi_u.is_empty() {
        return Err(lines.err("family has no time stamps"));
    }
    let grid = (0..phi_u.len()).map(|k| k as f64 * dt).collect();
    SchedulingFamily::new(index, grid, phi_u, phi_y)
}

/// A certified controller as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerRecord {
    pub index: usize,
    /// Linearization point (rad), when known.
    pub q_bar: Option<Vec<f64>>,
    pub epsilon: f64,
    pub beta: f64,
    pub lmi_max_eig: f64,
    pub realization: LtiSystem,
    pub p: DMatrix<f64>,
    pub triple: QsrTriple,
}

impl From<&Subcontroller> for ControllerRecord {
    fn from(c: &Subcontroller) -> Self {
        ControllerRecord {
            index: c.index,
            q_bar: Some(c.q_bar.to_vec()),
            epsilon: c.certificate.epsilon,
            beta: c.certificate.beta,
            lmi_max_eig: c.certificate.lmi_max_eig,
            realization: c.certificate.realization.clone(),
            p: c.certificate.p.clone(),
            triple: c.certificate.triple.clone(),
        }
    }
}

pub fn write_controller(c: &ControllerRecord) -> String {
    let mut out = format!("controller i={}\n", c.index);
    if let Some(q) = &c.q_bar {
        out.push_str("q_bar ");
        write_row(&mut out, q.iter().copied());
    }
    let _ = writeln!(out, "epsilon {}", fmt_g17(c.epsilon));
    let _ = writeln!(out, "beta {}", fmt_g17(c.beta));
    let _ = writeln!(out, "lmi_max_eig {}", fmt_g17(c.lmi_max_eig));
    write_matrix(&mut out, "A_c", &c.realization.a);
    write_matrix(&mut out, "B_c", &c.realization.b);
    write_matrix(&mut out, "C_c", &c.realization.c);
    write_matrix(&mut out, "P", &c.p);
    write_matrix(&mut out, "Q_c", c.triple.q());
    write_matrix(&mut out, "S_c", c.triple.s());
    write_matrix(&mut out, "R_c", c.triple.r());
    out
}

pub fn read_controller(text: &str) -> Result<ControllerRecord> {
    let mut lines = Lines::new(text);
    let fields = header(&mut lines, "controller")?;
    let index: usize = field(&lines, &fields, "i")?;
    let q_bar = match lines.peek() {
        Some(l) if l.starts_with("q_bar") => {
            let l = lines.next()?;
            let vals = l
                .split_whitespace()
                .skip(1)
                .map(|t| t.parse::<f64>().map_err(|_| lines.err(format!("invalid number '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            Some(vals)
        }
        _ => None,
    };
    let epsilon = lines.scalar("epsilon")?;
    let beta = lines.scalar("beta")?;
    let lmi_max_eig = lines.scalar("lmi_max_eig")?;
    let a = lines.matrix("A_c")?;
    let b = lines.matrix("B_c")?;
    let c = lines.matrix("C_c")?;
    let p = lines.matrix("P")?;
    let q_c = lines.matrix("Q_c")?;
    let s_c = lines.matrix("S_c")?;
    let r_c = lines.matrix("R_c")?;
    let d = DMatrix::zeros(c.nrows(), b.ncols());
    let realization = LtiSystem::new(a, b, c, d)?.with_label(format!("controller {index}"));
    if p.shape() != (realization.n_x(), realization.n_x()) {
        return Err(lines.err("P does not match the controller order"));
    }
    let triple = QsrTriple::new(q_c, s_c, r_c)?;
    Ok(ControllerRecord {
        index,
        q_bar,
        epsilon,
        beta,
        lmi_max_eig,
        realization,
        p,
        triple,
    })
}

/// Bank manifest: one controller file name per line, in index order.
pub fn write_manifest(files: &[String]) -> String {
    let mut out = format!("controller-bank v1 n={}\n", files.len());
    for f in files {
        out.push_str(f);
        out.push('\n');
    }
    out
}

pub fn read_manifest(text: &str) -> Result<Vec<String>> {
    let mut lines = Lines::new(text);
    let fields = header(&mut lines, "controller-bank v1")?;
    let n: usize = field(&lines, &fields, "n")?;
    let mut files = Vec::with_capacity(n);
    while let Some(l) = lines.peek() {
        lines.next()?;
        files.push(l.to_string());
    }
    if files.len() != n {
        return Err(lines.err(format!("manifest lists {} files, header says {n}", files.len())));
    }
    Ok(files)
}
