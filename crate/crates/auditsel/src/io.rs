//! CSV formats and category label mapping.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use auditsel_core::{AuditedRecord, ContingencyTable3, UnitRecord};
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Labels of one categorical variable, indexed in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Labels {
    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        let mut out = Self::default();
        for l in labels {
            if out.index.contains_key(&l) {
                bail!("duplicate category label {l:?}");
            }
            out.intern(&l);
        }
        Ok(out)
    }

    /// Index of `label`, assigning the next one if it is new.
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), i);
        i
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Category mappings of `X` and `Y`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Categories {
    pub x: Labels,
    pub y: Labels,
}

impl Categories {
    /// Looks up labels, collecting every unknown one.
    fn resolve(&self, rows: &[(String, String)]) -> Result<Vec<(usize, usize)>> {
        let mut unknown_x = Vec::new();
        let mut unknown_y = Vec::new();
        let mut out = Vec::with_capacity(rows.len());
        for (x, y) in rows {
            match (self.x.get(x), self.y.get(y)) {
                (Some(i), Some(j)) => out.push((i, j)),
                (ix, iy) => {
                    if ix.is_none() && !unknown_x.contains(x) {
                        unknown_x.push(x.clone());
                    }
                    if iy.is_none() && !unknown_y.contains(y) {
                        unknown_y.push(y.clone());
                    }
                }
            }
        }
        if !unknown_x.is_empty() || !unknown_y.is_empty() {
            bail!("unknown category labels: x {unknown_x:?}, y {unknown_y:?}");
        }
        Ok(out)
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn require_headers(rdr: &mut csv::Reader<fs::File>, path: &Path, required: &[&str]) -> Result<()> {
    let headers = rdr
        .headers()
        .with_context(|| format!("{}: cannot read header", path.display()))?;
    let missing: Vec<&str> = required
        .iter()
        .copied()
        .filter(|h| !headers.iter().any(|c| c == *h))
        .collect();
    if !missing.is_empty() {
        bail!(
            "{}: header is missing column(s) {}",
            path.display(),
            missing.join(", ")
        );
    }
    Ok(())
}

fn line_of(pos: Option<&csv::Position>) -> u64 {
    pos.map_or(0, |p| p.line())
}

/// Reads every row of a CSV file into `T`, reporting the line of any error.
fn read_rows<T: for<'de> Deserialize<'de>>(
    path: &Path,
    required: &[&str],
) -> Result<Vec<(u64, T)>> {
    let mut rdr = reader(path)?;
    require_headers(&mut rdr, path, required)?;
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record
            .map_err(|e| anyhow!("{}: line {}: {e}", path.display(), line_of(e.position())))?;
        let line = line_of(record.position());
        let row: T = record
            .deserialize(Some(&headers))
            .map_err(|e| anyhow!("{}: line {line}: {e}", path.display()))?;
        out.push((line, row));
    }
    Ok(out)
}

fn parse_flag(path: &Path, line: u64, value: &str) -> Result<bool> {
    match value {
        "0" => Ok(false),
        "1" => Ok(true),
        other => bail!(
            "{}: line {line}: z must be 0 or 1, got {other:?}",
            path.display()
        ),
    }
}

#[derive(Deserialize)]
struct UnitRow {
    unit_id: String,
    x: String,
    y: String,
    z: String,
}

/// Unit-level data with its category mapping.
#[derive(Debug, Clone)]
pub struct UnitData {
    pub units: Vec<UnitRecord>,
    pub categories: Categories,
}

impl UnitData {
    pub fn table(&self) -> Result<ContingencyTable3> {
        let table = ContingencyTable3::tabulate(
            self.categories.x.len(),
            self.categories.y.len(),
            self.units.iter().map(|u| (u.x, u.y, u.z_initial)),
        )?;
        Ok(table)
    }
}

/// Reads `unit_id,x,y,z`. With `categories` given, labels must be known;
/// otherwise they are indexed in first-appearance order.
pub fn read_units(path: &Path, categories: Option<&Categories>) -> Result<UnitData> {
    let rows: Vec<(u64, UnitRow)> = read_rows(path, &["unit_id", "x", "y", "z"])?;
    let mut flags = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        if row.unit_id.is_empty() {
            bail!("{}: line {line}: empty unit_id", path.display());
        }
        flags.push(parse_flag(path, *line, &row.z)?);
    }
    let (indices, categories) = match categories {
        Some(c) => {
            let pairs: Vec<(String, String)> = rows
                .iter()
                .map(|(_, r)| (r.x.clone(), r.y.clone()))
                .collect();
            (c.resolve(&pairs)?, c.clone())
        }
        None => {
            let mut c = Categories::default();
            let idx = rows
                .iter()
                .map(|(_, r)| (c.x.intern(&r.x), c.y.intern(&r.y)))
                .collect();
            (idx, c)
        }
    };
    let units = rows
        .into_iter()
        .zip(indices)
        .zip(flags)
        .map(|(((_, r), (x, y)), z)| UnitRecord::new(r.unit_id, x, y, z))
        .collect();
    Ok(UnitData { units, categories })
}

#[derive(Deserialize)]
struct TableRow {
    x: String,
    y: String,
    n0: u64,
    n1: u64,
}

/// Reads an aggregated table `x,y,n0,n1`; missing `(x, y)` pairs are zero.
pub fn read_table(path: &Path) -> Result<(ContingencyTable3, Categories)> {
    let rows: Vec<(u64, TableRow)> = read_rows(path, &["x", "y", "n0", "n1"])?;
    let mut c = Categories::default();
    let cells: Vec<(usize, usize, u64, u64)> = rows
        .iter()
        .map(|(_, r)| (c.x.intern(&r.x), c.y.intern(&r.y), r.n0, r.n1))
        .collect();
    let (xn, yn) = (c.x.len(), c.y.len());
    let mut counts = vec![0u64; xn * yn * 2];
    let mut seen = vec![false; xn * yn];
    for ((line, _), &(x, y, n0, n1)) in rows.iter().zip(&cells) {
        let s = x * yn + y;
        if seen[s] {
            bail!(
                "{}: line {line}: stratum ({}, {}) listed twice",
                path.display(),
                c.x.label(x),
                c.y.label(y)
            );
        }
        seen[s] = true;
        counts[2 * s] = n0;
        counts[2 * s + 1] = n1;
    }
    let table = ContingencyTable3::new(xn, yn, counts)?;
    Ok((table, c))
}

pub fn write_table(path: &Path, table: &ContingencyTable3, c: &Categories) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "n0", "n1"])?;
    for x in 0..table.x_categories() {
        for y in 0..table.y_categories() {
            w.write_record([
                c.x.label(x).to_owned(),
                c.y.label(y).to_owned(),
                table.count(x, y, 0).to_string(),
                table.count(x, y, 1).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct CategoryRow {
    variable: String,
    index: usize,
    label: String,
}

pub fn write_categories(path: &Path, c: &Categories) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["variable", "index", "label"])?;
    for (name, labels) in [("x", &c.x), ("y", &c.y)] {
        for (i, l) in labels.labels().iter().enumerate() {
            w.write_record([name, &i.to_string(), l])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_categories(path: &Path) -> Result<Categories> {
    let rows: Vec<(u64, CategoryRow)> = read_rows(path, &["variable", "index", "label"])?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (line, r) in rows {
        let target = match r.variable.as_str() {
            "x" => &mut x,
            "y" => &mut y,
            other => bail!(
                "{}: line {line}: unknown variable {other:?}",
                path.display()
            ),
        };
        if r.index != target.len() {
            bail!(
                "{}: line {line}: indices must be listed in order",
                path.display()
            );
        }
        target.push(r.label);
    }
    Ok(Categories {
        x: Labels::from_labels(x)?,
        y: Labels::from_labels(y)?,
    })
}

/// One row of a plan file.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct PlanRow {
    pub i: String,
    pub j: String,
    pub n_ij0: u64,
    pub n_ij1: u64,
    pub delta_plus: u64,
    pub delta_minus: u64,
}

pub fn write_plan(
    path: &Path,
    table: &ContingencyTable3,
    dp: &[u64],
    dm: &[u64],
    c: &Categories,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["i", "j", "n_ij0", "n_ij1", "delta_plus", "delta_minus"])?;
    let yn = table.y_categories();
    for x in 0..table.x_categories() {
        for y in 0..yn {
            let s = x * yn + y;
            w.write_record([
                c.x.label(x).to_owned(),
                c.y.label(y).to_owned(),
                table.count(x, y, 0).to_string(),
                table.count(x, y, 1).to_string(),
                dp[s].to_string(),
                dm[s].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a plan file into per-stratum `(n0, n1, delta_plus, delta_minus)`,
/// indexed `x * J + y` under `c`.
pub fn read_plan(path: &Path, c: &Categories) -> Result<Vec<[u64; 4]>> {
    let rows: Vec<(u64, PlanRow)> = read_rows(
        path,
        &["i", "j", "n_ij0", "n_ij1", "delta_plus", "delta_minus"],
    )?;
    let pairs: Vec<(String, String)> = rows
        .iter()
        .map(|(_, r)| (r.i.clone(), r.j.clone()))
        .collect();
    let idx = c.resolve(&pairs)?;
    let yn = c.y.len();
    let mut out = vec![[0u64; 4]; c.x.len() * yn];
    for ((_, r), (x, y)) in rows.iter().zip(idx) {
        out[x * yn + y] = [r.n_ij0, r.n_ij1, r.delta_plus, r.delta_minus];
    }
    Ok(out)
}

#[derive(Deserialize)]
struct AuditedRow {
    #[allow(dead_code)]
    unit_id: String,
    w: String,
    x: String,
    y: String,
}

/// Audited units with the `W` mapping; `x` and `y` follow `categories` when
/// given, otherwise first-appearance order.
pub struct AuditedInput {
    pub records: Vec<AuditedRecord>,
    pub w: Labels,
    pub categories: Categories,
}

pub fn read_audited(path: &Path, categories: Option<&Categories>) -> Result<AuditedInput> {
    let rows: Vec<(u64, AuditedRow)> = read_rows(path, &["unit_id", "w", "x", "y"])?;
    let mut w = Labels::default();
    let ws: Vec<usize> = rows.iter().map(|(_, r)| w.intern(&r.w)).collect();
    let (xy, categories) = match categories {
        Some(c) => {
            let pairs: Vec<(String, String)> = rows
                .iter()
                .map(|(_, r)| (r.x.clone(), r.y.clone()))
                .collect();
            (c.resolve(&pairs)?, c.clone())
        }
        None => {
            let mut c = Categories::default();
            let idx = rows
                .iter()
                .map(|(_, r)| (c.x.intern(&r.x), c.y.intern(&r.y)))
                .collect();
            (idx, c)
        }
    };
    let records = ws
        .into_iter()
        .zip(xy)
        .map(|(w, (x, y))| AuditedRecord { w, x, y })
        .collect();
    Ok(AuditedInput {
        records,
        w,
        categories,
    })
}

#[derive(Deserialize)]
struct MarginRow {
    y: String,
    proportion: f64,
}

/// Tolerance on the sum of margin proportions read from file.
pub const MARGIN_SUM_TOLERANCE: f64 = 1e-6;

/// Reads `y,proportion` in the order of `y_labels`; strata missing from the
/// file get zero. Proportions summing to one within
/// [`MARGIN_SUM_TOLERANCE`] are rescaled to sum exactly to one.
pub fn read_margins(path: &Path, y_labels: &mut Labels) -> Result<Vec<f64>> {
    let rows: Vec<(u64, MarginRow)> = read_rows(path, &["y", "proportion"])?;
    let mut props = vec![0.0; y_labels.len()];
    for (line, r) in &rows {
        if !(r.proportion >= 0.0 && r.proportion.is_finite()) {
            bail!(
                "{}: line {line}: proportion must be a nonnegative number",
                path.display()
            );
        }
        let j = y_labels.intern(&r.y);
        if j >= props.len() {
            props.resize(j + 1, 0.0);
        }
        props[j] = r.proportion;
    }
    let sum: f64 = props.iter().sum();
    if (sum - 1.0).abs() > MARGIN_SUM_TOLERANCE {
        bail!("{}: proportions sum to {sum}, not 1", path.display());
    }
    Ok(props.iter().map(|p| p / sum).collect())
}

/// Hex SHA-256 of a file's bytes.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}
