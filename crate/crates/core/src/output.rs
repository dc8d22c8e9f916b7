//! Deterministic tabular output: CSV with a header row and `#` footer
//! records, or an equivalent JSON document. Floats carry 15 significant
//! digits in scientific notation.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("table `{table}`: {reason}")]
    Schema { table: String, reason: String },
    #[error("table `{table}` line {line}: {reason}")]
    Parse {
        table: String,
        line: usize,
        reason: String,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Float,
    Int,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
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

impl Cell {
    fn kind(&self) -> ColumnKind {
        match self {
            Cell::Float(_) => ColumnKind::Float,
            Cell::Int(_) => ColumnKind::Int,
            Cell::Text(_) => ColumnKind::Text,
        }
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Cell::Float(a), Cell::Float(b)) => a.total_cmp(b),
            (Cell::Int(a), Cell::Int(b)) => a.cmp(b),
            (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            _ => Ordering::Equal,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Cell::Text(s) => Some(s),
            _ => None,
        }
    }
}

/// `{:.14e}`: 15 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // avoid emitting "-0.00000000000000e0"
        let v = if v == 0.0 { 0.0 } else { v };
        format!("{v:.14e}")
    }
}

fn round15(v: f64) -> f64 {
    format_float(v).parse().unwrap_or(v)
}

/// Column layout shared by emission and parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub name: String,
    pub columns: Vec<Column>,
    /// Column positions rows are sorted by, in priority order.
    pub keys: Vec<usize>,
}

impl Schema {
    pub fn new(name: &str, columns: &[(&str, ColumnKind)], keys: &[&str]) -> Self {
        let columns: Vec<Column> = columns
            .iter()
            .map(|(n, k)| Column {
                name: n.to_string(),
                kind: *k,
            })
            .collect();
        let keys = keys
            .iter()
            .map(|k| {
                columns
                    .iter()
                    .position(|c| c.name == *k)
                    .unwrap_or_else(|| panic!("key `{k}` is not a column of `{name}`"))
            })
            .collect();
        Self {
            name: name.to_string(),
            columns,
            keys,
        }
    }

    pub fn table(&self) -> OutputTable {
        OutputTable {
            schema: self.clone(),
            rows: Vec::new(),
            footer: Vec::new(),
        }
    }

    fn err(&self, reason: impl Into<String>) -> OutputError {
        OutputError::Schema {
            table: self.name.clone(),
            reason: reason.into(),
        }
    }

    fn parse_cell(&self, col: usize, text: &str, line: usize) -> Result<Cell, OutputError> {
        let bad = |reason: String| OutputError::Parse {
            table: self.name.clone(),
            line,
            reason,
        };
        let column = &self.columns[col];
        match column.kind {
            ColumnKind::Float => match text {
                "NaN" => Ok(Cell::Float(f64::NAN)),
                "inf" => Ok(Cell::Float(f64::INFINITY)),
                "-inf" => Ok(Cell::Float(f64::NEG_INFINITY)),
                _ => text
                    .parse()
                    .map(Cell::Float)
                    .map_err(|e| bad(format!("column `{}`: {e}", column.name))),
            },
            ColumnKind::Int => text
                .parse()
                .map(Cell::Int)
                .map_err(|e| bad(format!("column `{}`: {e}", column.name))),
            ColumnKind::Text => Ok(Cell::Text(text.to_string())),
        }
    }

    pub fn parse_csv(&self, text: &str) -> Result<OutputTable, OutputError> {
        let mut lines = text.split('\n').enumerate();
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        match lines.next() {
            Some((_, h)) if h == header.join(",") => {}
            other => {
                return Err(self.err(format!(
                    "header mismatch: expected `{}`, found `{}`",
                    header.join(","),
                    other.map_or("", |(_, h)| h)
                )))
            }
        }
        let mut table = self.table();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(rec) = line.strip_prefix("# ") {
                let (k, v) = rec.split_once('=').ok_or_else(|| OutputError::Parse {
                    table: self.name.clone(),
                    line: i + 1,
                    reason: "footer record without `=`".into(),
                })?;
                table.footer.push((k.to_string(), v.to_string()));
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != self.columns.len() {
                return Err(OutputError::Parse {
                    table: self.name.clone(),
                    line: i + 1,
                    reason: format!("{} fields, expected {}", fields.len(), self.columns.len()),
                });
            }
            let row = fields
                .iter()
                .enumerate()
                .map(|(c, f)| self.parse_cell(c, f, i + 1))
                .collect::<Result<Vec<_>, _>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn parse_json(&self, text: &str) -> Result<OutputTable, OutputError> {
        let doc: Json = serde_json::from_str(text)?;
        if doc["name"] != json!(self.name) {
            return Err(self.err(format!("name mismatch: {}", doc["name"])));
        }
        let columns: Vec<Column> = serde_json::from_value(doc["columns"].clone())?;
        if columns != self.columns {
            return Err(self.err("column schema mismatch"));
        }
        let mut table = self.table();
        let rows = doc["rows"].as_array().ok_or_else(|| self.err("rows is not an array"))?;
        for (i, row) in rows.iter().enumerate() {
            let cells = row.as_array().ok_or_else(|| self.err("row is not an array"))?;
            if cells.len() != self.columns.len() {
                return Err(self.err(format!("row {i} has {} cells", cells.len())));
            }
            let parsed = cells
                .iter()
                .zip(&self.columns)
                .map(|(v, c)| match (c.kind, v) {
                    (ColumnKind::Float, Json::Null) => Some(Cell::Float(f64::NAN)),
                    (ColumnKind::Float, v) => v.as_f64().map(Cell::Float),
                    (ColumnKind::Int, v) => v.as_i64().map(Cell::Int),
                    (ColumnKind::Text, v) => v.as_str().map(|s| Cell::Text(s.into())),
                }
                .ok_or_else(|| self.err(format!("row {i}: bad value for `{}`", c.name))))
                .collect::<Result<Vec<_>, _>>()?;
            table.rows.push(parsed);
        }
        if let Some(footer) = doc["footer"].as_array() {
            for rec in footer {
                let pair = rec.as_array().filter(|p| p.len() == 2);
                let (k, v) = pair
                    .and_then(|p| Some((p[0].as_str()?, p[1].as_str()?)))
                    .ok_or_else(|| self.err("footer record is not a [key, value] pair"))?;
                table.footer.push((k.into(), v.into()));
            }
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputTable {
    pub schema: Schema,
    pub rows: Vec<Vec<Cell>>,
    /// Summary records emitted after the rows, in insertion order.
    pub footer: Vec<(String, String)>,
}

impl OutputTable {
    pub fn name(&self) -> &str {
        &self.schema.name
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), OutputError> {
        if row.len() != self.schema.columns.len() {
            return Err(self.schema.err(format!(
                "row has {} cells, schema has {}",
                row.len(),
                self.schema.columns.len()
            )));
        }
        for (cell, col) in row.iter().zip(&self.schema.columns) {
            if cell.kind() != col.kind {
                return Err(self.schema.err(format!("column `{}` expects {:?}", col.name, col.kind)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    pub fn note_float(&mut self, key: &str, value: f64) {
        self.note(key, format_float(value));
    }

    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.schema.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?.into_iter().map(Cell::as_f64).collect()
    }

    /// Stable sort by the schema's key columns.
    pub fn sort(&mut self) {
        let keys = self.schema.keys.clone();
        self.rows.sort_by(|a, b| {
            keys.iter()
                .map(|&k| a[k].cmp_key(&b[k]))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.schema.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Float(v) => format_float(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        for (k, v) in &self.footer {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String, OutputError> {
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|r| {
                Json::Array(
                    r.iter()
                        .map(|c| match c {
                            Cell::Float(v) if v.is_finite() => json!(round15(*v)),
                            Cell::Float(_) => Json::Null,
                            Cell::Int(v) => json!(v),
                            Cell::Text(s) => json!(s),
                        })
                        .collect(),
                )
            })
            .collect();
        let doc = json!({
            "name": self.schema.name,
            "columns": self.schema.columns,
            "rows": rows,
            "footer": self.footer.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn render(self, table: &OutputTable) -> Result<String, OutputError> {
        match self {
            Format::Csv => Ok(table.to_csv()),
            Format::Json => table.to_json(),
        }
    }
}

/// Writes each table to `<dir>/<name>.<ext>`, one file at a time.
pub fn write_tables(
    dir: &Path,
    tables: &[OutputTable],
    format: Format,
) -> Result<Vec<PathBuf>, OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(tables.len());
    for t in tables {
        let path = dir.join(format!("{}.{}", t.name(), format.extension()));
        let body = format.render(t)?;
        fs::write(&path, body).map_err(|source| OutputError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}
