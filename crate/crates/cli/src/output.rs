//! Output files with provenance headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;
use spdc_core::fibercoupling::QuadratureSettings;
use spdc_core::jsa::write_matrix_csv;
use spdc_core::SpectralGrid;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
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
}

/// Where a file came from. Rendered as `#` comment lines in CSV and as a
/// `provenance` object in JSON.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub config: String,
    pub config_sha256: String,
    pub dispersion: String,
    pub quadrature: Option<QuadratureSettings>,
    pub grid_points: Option<usize>,
}

impl Provenance {
    fn write_header<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# tool: {}", self.tool)?;
        writeln!(out, "# command: {}", self.command)?;
        writeln!(out, "# config: {}", self.config)?;
        writeln!(out, "# config_sha256: {}", self.config_sha256)?;
        writeln!(out, "# dispersion: {}", self.dispersion)?;
        match &self.quadrature {
            Some(q) => writeln!(
                out,
                "# quadrature: nodes={} max_nodes={} tolerance={:e}",
                q.nodes, q.max_nodes, q.tolerance
            )?,
            None => writeln!(out, "# quadrature: none")?,
        }
        if let Some(n) = self.grid_points {
            writeln!(out, "# grid_points: {n}")?;
        }
        Ok(())
    }
}

/// Column-oriented table; non-finite numbers become JSON null and `nan` in CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// f64 as a JSON value; NaN and infinities map to null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => "nan".into(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{x:e}"),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Writes files into one output directory and remembers their paths.
pub struct Emitter {
    dir: PathBuf,
    format: Format,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Emitter {
    pub fn new(dir: &Path, format: Format, provenance: Provenance) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            provenance,
            written: Vec::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.written
    }

    fn write_with(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let io = |e| CliError::Io {
            path: path.clone(),
            source: e,
        };
        let mut out = BufWriter::new(File::create(&path).map_err(io)?);
        body(&mut out).and_then(|_| out.flush()).map_err(io)?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value)?;
        self.write_with(name, |out| writeln!(out, "{text}"))
    }

    pub fn table(&mut self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        let name = format!("{stem}.{}", self.format.extension());
        match self.format {
            Format::Csv => {
                let prov = self.provenance.clone();
                self.write_with(&name, |out| {
                    prov.write_header(out)?;
                    writeln!(out, "{}", table.columns.join(","))?;
                    for row in &table.rows {
                        let cells: Vec<String> = row.iter().map(csv_cell).collect();
                        writeln!(out, "{}", cells.join(","))?;
                    }
                    Ok(())
                })
            }
            Format::Json => {
                let value = serde_json::json!({
                    "provenance": self.provenance,
                    "columns": table.columns,
                    "rows": table.rows,
                });
                self.write_json(&name, &value)
            }
        }
    }

    /// Real matrix on a spectral grid, rows signal and columns idler.
    pub fn spectral_matrix(
        &mut self,
        stem: &str,
        grid: &SpectralGrid,
        values: &DMatrix<f64>,
    ) -> Result<PathBuf, CliError> {
        let name = format!("{stem}.{}", self.format.extension());
        match self.format {
            Format::Csv => {
                let prov = self.provenance.clone();
                self.write_with(&name, |out| {
                    prov.write_header(out)?;
                    write_matrix_csv(out, grid, |r, c| values[(r, c)])
                })
            }
            Format::Json => {
                let rows: Vec<Vec<Value>> = values
                    .row_iter()
                    .map(|row| row.iter().map(|&v| num(v)).collect())
                    .collect();
                let value = serde_json::json!({
                    "provenance": self.provenance,
                    "signal_center_rad_s": grid.signal.center(),
                    "idler_center_rad_s": grid.idler.center(),
                    "signal_detuning_rad_s": grid.signal.detunings(),
                    "idler_detuning_rad_s": grid.idler.detunings(),
                    "values": rows,
                });
                self.write_json(&name, &value)
            }
        }
    }

    /// Matrix with arbitrary labelled axes (CSV corner label `rows\columns`).
    pub fn labelled_matrix(
        &mut self,
        stem: &str,
        row_label: &str,
        rows: &[f64],
        column_label: &str,
        columns: &[f64],
        values: &DMatrix<f64>,
    ) -> Result<PathBuf, CliError> {
        let name = format!("{stem}.{}", self.format.extension());
        match self.format {
            Format::Csv => {
                let prov = self.provenance.clone();
                self.write_with(&name, |out| {
                    prov.write_header(out)?;
                    write!(out, "{row_label}\\{column_label}")?;
                    for c in columns {
                        write!(out, ",{c:e}")?;
                    }
                    writeln!(out)?;
                    for (r, x) in rows.iter().enumerate() {
                        write!(out, "{x:e}")?;
                        for c in 0..columns.len() {
                            write!(out, ",{}", csv_cell(&num(values[(r, c)])))?;
                        }
                        writeln!(out)?;
                    }
                    Ok(())
                })
            }
            Format::Json => {
                let grid: Vec<Vec<Value>> = values
                    .row_iter()
                    .map(|row| row.iter().map(|&v| num(v)).collect())
                    .collect();
                let value = serde_json::json!({
                    "provenance": self.provenance,
                    row_label: rows,
                    column_label: columns,
                    "values": grid,
                });
                self.write_json(&name, &value)
            }
        }
    }

    /// The command summary, always JSON, with provenance attached.
    pub fn summary(&mut self, mut summary: Value) -> Result<Value, CliError> {
        if let Value::Object(map) = &mut summary {
            map.insert("provenance".into(), serde_json::to_value(&self.provenance)?);
        }
        let name = format!("{}_summary.json", self.provenance.command.replace('-', "_"));
        self.write_json(&name, &summary)?;
        Ok(summary)
    }
}
