use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::store::grid::ParameterGrid;

/// Symmetric 2x2 metric tensor. One-parameter fields use `g00` only.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metric {
    pub g00: f64,
    pub g01: f64,
    pub g11: f64,
}

/// Negative eigenvalues down to `-PSD_TOL * scale` are treated as rounding.
pub const PSD_TOL: f64 = 1e-9;

impl Metric {
    pub fn scalar(g: f64) -> Self {
        Self {
            g00: g,
            g01: 0.0,
            g11: 0.0,
        }
    }

    pub fn trace(&self) -> f64 {
        self.g00 + self.g11
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.g00 + self.g11);
        let r = (0.25 * (self.g00 - self.g11).powi(2) + self.g01 * self.g01).sqrt();
        (mean + r, mean - r)
    }

    /// Angle of the leading eigenvector in `(-pi/2, pi/2]`.
    pub fn principal_angle(&self) -> f64 {
        0.5 * (2.0 * self.g01).atan2(self.g00 - self.g11)
    }

    pub fn is_psd(&self) -> bool {
        let (_, lo) = self.eigenvalues();
        let scale = self.g00.abs().max(self.g11.abs()).max(self.g01.abs()).max(f64::MIN_POSITIVE);
        self.g00.is_finite() && self.g01.is_finite() && self.g11.is_finite() && lo >= -PSD_TOL * scale
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        match (mu, nu) {
            (0, 0) => self.g00,
            (1, 1) => self.g11,
            _ => self.g01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    ExactFiniteDifference,
    ExplicitFormula,
    Mcmc,
    Classifim,
    Other(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::ExactFiniteDifference => f.write_str("exact-finite-difference"),
            Provenance::ExplicitFormula => f.write_str("explicit-formula"),
            Provenance::Mcmc => f.write_str("mcmc"),
            Provenance::Classifim => f.write_str("classifim"),
            Provenance::Other(s) => f.write_str(s),
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "exact-finite-difference" => Provenance::ExactFiniteDifference,
            "explicit-formula" => Provenance::ExplicitFormula,
            "mcmc" => Provenance::Mcmc,
            "classifim" => Provenance::Classifim,
            other => Provenance::Other(other.to_string()),
        })
    }
}

/// A metric value at every point of a grid, plus an optional standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct FimField {
    pub grid: ParameterGrid,
    pub entries: Vec<Metric>,
    pub stderr: Option<Vec<Metric>>,
    pub provenance: Provenance,
}

impl FimField {
    pub fn new(grid: ParameterGrid, entries: Vec<Metric>, provenance: Provenance) -> Result<Self> {
        if entries.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                left: entries.len(),
                right: grid.len(),
            });
        }
        Ok(Self {
            grid,
            entries,
            stderr: None,
            provenance,
        })
    }

    pub fn with_stderr(mut self, stderr: Vec<Metric>) -> Result<Self> {
        if stderr.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                left: stderr.len(),
                right: self.entries.len(),
            });
        }
        self.stderr = Some(stderr);
        Ok(self)
    }

    /// First entry that is not positive semidefinite, if any.
    pub fn first_non_psd(&self) -> Option<usize> {
        self.entries.iter().position(|m| !m.is_psd())
    }

    /// Component `(mu, nu)` along a one-dimensional slice of the grid.
    ///
    /// `axis` is the axis that varies; `fixed` is the index on the other axis.
    pub fn slice(&self, axis: usize, fixed: usize, mu: usize, nu: usize) -> Vec<f64> {
        let n = self.grid.per_axis();
        if self.grid.dims() == 1 {
            return self.entries.iter().map(|m| m.get(mu, nu)).collect();
        }
        (0..n)
            .map(|l| {
                let i = if axis == 0 { self.grid.index(l, fixed) } else { self.grid.index(fixed, l) };
                self.entries[i].get(mu, nu)
            })
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        writeln!(out, "# provenance={}", self.provenance).unwrap();
        writeln!(out, "# dims={}", g.dims()).unwrap();
        writeln!(out, "# resolution={}", g.resolution()).unwrap();
        writeln!(out, "# per_axis={}", g.per_axis()).unwrap();
        writeln!(out, "# offset={}", g.offset()).unwrap();
        let mut header = String::from("l0\tl1\tlambda0\tlambda1\tg00\tg01\tg11");
        if self.stderr.is_some() {
            header.push_str("\tse00\tse01\tse11");
        }
        writeln!(out, "{header}").unwrap();
        for (i, m) in self.entries.iter().enumerate() {
            let (l0, l1) = g.unravel(i);
            let p = g.point(i);
            write!(out, "{l0}\t{l1}\t{}\t{}\t{}\t{}\t{}", p[0], p[1], m.g00, m.g01, m.g11).unwrap();
            if let Some(se) = &self.stderr {
                let s = se[i];
                write!(out, "\t{}\t{}\t{}", s.g00, s.g01, s.g11).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let bad = |d: String| Error::malformed("fim field", d);
        let mut header = std::collections::BTreeMap::new();
        let mut rows = Vec::new();
        let mut has_se = None;
        for line in text.lines() {
            if let Some(h) = line.strip_prefix('#') {
                if let Some((k, v)) = h.trim().split_once('=') {
                    header.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with("l0") {
                has_se = Some(line.split('\t').count() == 10);
                continue;
            }
            rows.push(line);
        }
        let has_se = has_se.ok_or_else(|| bad("missing column header".into()))?;
        let get = |k: &str| header.get(k).ok_or_else(|| bad(format!("missing header {k}")));
        let parse_usize = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad(format!("bad {k}"))) };
        let offset: f64 = get("offset")?.parse().map_err(|_| bad("bad offset".into()))?;
        let grid = ParameterGrid::new(parse_usize("dims")?, parse_usize("resolution")?, parse_usize("per_axis")?, offset)?;
        let provenance: Provenance = get("provenance")?.parse().unwrap();
        if rows.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                left: rows.len(),
                right: grid.len(),
            });
        }
        let mut entries = Vec::with_capacity(rows.len());
        let mut se = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            let cols: Vec<&str> = row.split('\t').collect();
            let want = if has_se { 10 } else { 7 };
            if cols.len() != want {
                return Err(bad(format!("row {i}: expected {want} columns, found {}", cols.len())));
            }
            let f = |j: usize| -> Result<f64> { cols[j].parse().map_err(|_| bad(format!("row {i}: column {j}"))) };
            let (l0, l1): (usize, usize) = (
                cols[0].parse().map_err(|_| bad(format!("row {i}: l0")))?,
                cols[1].parse().map_err(|_| bad(format!("row {i}: l1")))?,
            );
            if grid.unravel(i) != (l0, l1) {
                return Err(bad(format!("row {i}: out of order")));
            }
            entries.push(Metric {
                g00: f(4)?,
                g01: f(5)?,
                g11: f(6)?,
            });
            if has_se {
                se.push(Metric {
                    g00: f(7)?,
                    g01: f(8)?,
                    g11: f(9)?,
                });
            }
        }
        let field = FimField::new(grid, entries, provenance)?;
        if has_se {
            field.with_stderr(se)
        } else {
            Ok(field)
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text)
    }
}
