use std::fmt::Write as _;
use std::path::Path;

use crate::efactor::PotentialCurve;
use crate::Result;

/// One CSV field.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v.unwrap_or(f64::NAN))
    }
}

/// 17 significant digits in scientific notation.
pub fn format_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Num(v) => f.write_str(&format_num(*v)),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// `# key: value` lines written above the column header.
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            ..Table::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Full file text: provenance header, config, meta lines, then the body.
    pub fn render(&self, prov: &Provenance) -> String {
        let mut out = String::new();
        writeln!(out, "# {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(out, "# task: {}", prov.task).unwrap();
        writeln!(out, "# config_sha256: {}", prov.digest).unwrap();
        for (k, v) in &self.meta {
            writeln!(out, "# {k}: {v}").unwrap();
        }
        for line in prov.config.lines() {
            if line.is_empty() {
                out.push_str("# config:\n");
            } else {
                writeln!(out, "# config: {line}").unwrap();
            }
        }
        out.push_str(&self.body());
        out
    }
}

/// Header data shared by every artifact of a run.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub task: String,
    pub digest: String,
    pub config: String,
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub table: Table,
}

impl Artifact {
    pub fn new(name: impl Into<String>, table: Table) -> Artifact {
        Artifact {
            name: name.into(),
            table,
        }
    }
}

/// Writes every artifact; nothing is written until all of them are rendered.
pub fn write_all(dir: &Path, artifacts: &[Artifact], prov: &Provenance) -> Result<Vec<std::path::PathBuf>> {
    let rendered: Vec<(std::path::PathBuf, String)> = artifacts
        .iter()
        .map(|a| (dir.join(&a.name), a.table.render(prov)))
        .collect();
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(rendered.len());
    for (path, text) in rendered {
        std::fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Curve schema: x, bare_V, eph_em, eph_kin, total, density, mask (1 = valid).
pub fn curve_table(c: &PotentialCurve) -> Table {
    let mut t = Table::new(&["x", "bare_V", "eph_em", "eph_kin", "total", "density", "mask"]);
    for i in 0..c.x.len() {
        t.push(vec![
            c.x[i].into(),
            c.bare[i].into(),
            c.eph_em[i].into(),
            c.eph_kin[i].into(),
            c.total[i].into(),
            c.density[i].into(),
            c.mask[i].into(),
        ]);
    }
    t.note("masked_points", c.mask.iter().filter(|m| !**m).count());
    t
}

/// Parses the numeric body of a rendered table (header lines and column row skipped).
pub fn parse_body(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    let cols = lines
        .next()
        .map(|l| l.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (cols, rows)
}
