//! Text formats: trajectory and goal-path CSV, model JSON.
//!
//! Floats are written with the shortest representation that parses back to
//! the same value, so save -> load -> save is byte-identical.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, BasisSet, DEFAULT_TRUNC_KAPPA};
use crate::dmp::Goal;
use crate::error::{DmpError, Result};
use crate::learn::{DmpModel, Gains};
use crate::phase::PhaseConfig;
use crate::trajectory::Trajectory;

/// Version written into every model file.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

impl From<std::io::Error> for DmpError {
    fn from(e: std::io::Error) -> Self {
        DmpError::Io(e.to_string())
    }
}

impl From<csv::Error> for DmpError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => DmpError::Io(e.to_string()),
            _ => DmpError::Parse(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for DmpError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            DmpError::Io(e.to_string())
        } else {
            DmpError::Parse(e.to_string())
        }
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}

/// Reads a table with header `t,<prefix>1,...,<prefix>d`. Returns the times
/// and a row-per-sample matrix.
fn read_table<R: Read>(input: R, prefix: char) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    if header.len() < 2 || &header[0] != "t" {
        return Err(DmpError::Parse(format!(
            "expected header `t,{prefix}1,...`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    for (j, name) in header.iter().enumerate().skip(1) {
        if name != format!("{prefix}{j}") {
            return Err(DmpError::Parse(format!("column {j} is `{name}`, expected `{prefix}{j}`")));
        }
    }
    let d = header.len() - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != d + 1 {
            return Err(DmpError::Parse(format!(
                "row {} has {} fields, expected {}",
                line + 1,
                record.len(),
                d + 1
            )));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| DmpError::Parse(format!("row {}: `{field}` is not a number", line + 1)))?;
            if j == 0 {
                times.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let positions = DMatrix::from_row_slice(times.len(), d, &values);
    Ok((times, positions))
}

fn write_table<W: Write>(out: W, prefix: char, times: &[f64], values: &DMatrix<f64>) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=values.ncols()).map(|j| format!("{prefix}{j}")));
    writer.write_record(&header)?;
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![fmt_float(*t)];
        row.extend(values.row(k).iter().map(|v| fmt_float(*v)));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory> {
    let (times, positions) = read_table(input, 'x')?;
    Trajectory::new(times, positions)
}

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    write_table(out, 'x', traj.times(), traj.positions())
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let file = fs::File::open(path).map_err(|e| DmpError::Io(format!("{}: {e}", path.display())))?;
    read_trajectory(file).map_err(|e| with_path(e, path))
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| DmpError::Io(format!("{}: {e}", path.display())))?;
    write_trajectory(std::io::BufWriter::new(file), traj)
}

/// Goal path with header `t,g1,...,gd`, linearly interpolated in time.
pub fn read_goal_path<R: Read>(input: R) -> Result<Goal> {
    let (times, values) = read_table(input, 'g')?;
    let goals = (0..values.nrows()).map(|k| values.row(k).transpose()).collect();
    Goal::from_path(times, goals)
}

pub fn load_goal_path(path: &Path) -> Result<Goal> {
    let file = fs::File::open(path).map_err(|e| DmpError::Io(format!("{}: {e}", path.display())))?;
    read_goal_path(file).map_err(|e| with_path(e, path))
}

fn with_path(e: DmpError, path: &Path) -> DmpError {
    match e {
        DmpError::Parse(msg) => DmpError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsDto {
    elastic: Vec<f64>,
    damping: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisDto {
    family: String,
    n: usize,
    overlap: f64,
    trunc_kappa: Option<f64>,
    biased: bool,
    centers: Vec<f64>,
    widths: Vec<f64>,
}

/// On-disk model layout; weights and biases are stored one row per dimension.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDto {
    schema_version: u32,
    dims: usize,
    gains: GainsDto,
    phase: PhaseConfig,
    basis: BasisDto,
    weights: Vec<Vec<f64>>,
    biases: Option<Vec<Vec<f64>>>,
    learned_x0: Vec<f64>,
    learned_g: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|p| m.row(p).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return Err(DmpError::DimensionMismatch {
            expected: ncols,
            found: r.len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |p, i| rows[p][i]))
}

impl From<&DmpModel> for ModelDto {
    fn from(model: &DmpModel) -> Self {
        let basis = model.basis();
        ModelDto {
            schema_version: MODEL_SCHEMA_VERSION,
            dims: model.dims(),
            gains: GainsDto {
                elastic: model.gains().elastic().to_vec(),
                damping: model.gains().damping().to_vec(),
            },
            phase: *model.phase(),
            basis: BasisDto {
                family: basis.family().tag(),
                n: basis.len() - 1,
                overlap: basis.overlap(),
                trunc_kappa: basis.family().kappa(),
                biased: basis.biased(),
                centers: basis.centers().to_vec(),
                widths: basis.widths().to_vec(),
            },
            weights: rows(model.weights()),
            biases: model.biases().map(rows),
            learned_x0: model.learned_x0().iter().copied().collect(),
            learned_g: model.learned_g().iter().copied().collect(),
        }
    }
}

impl ModelDto {
    fn into_model(self) -> Result<DmpModel> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(DmpError::Parse(format!(
                "unsupported schema version {} (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let gains = Gains::new(self.gains.elastic, self.gains.damping)?;
        if gains.dims() != self.dims {
            return Err(DmpError::DimensionMismatch {
                expected: self.dims,
                found: gains.dims(),
            });
        }
        self.phase.validate()?;
        let b = self.basis;
        let family = BasisFamily::from_tag(&b.family, b.trunc_kappa.unwrap_or(DEFAULT_TRUNC_KAPPA))?;
        if b.centers.len() != b.n + 1 {
            return Err(DmpError::DimensionMismatch {
                expected: b.n + 1,
                found: b.centers.len(),
            });
        }
        let basis = BasisSet::from_parts(family, b.centers, b.widths, b.overlap, b.biased)?;
        let len = basis.len();
        let weights = from_rows(&self.weights, len)?;
        let biases = self.biases.as_deref().map(|r| from_rows(r, len)).transpose()?;
        DmpModel::new(
            gains,
            self.phase,
            basis,
            weights,
            biases,
            DVector::from_vec(self.learned_x0),
            DVector::from_vec(self.learned_g),
        )
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn model_to_json(model: &DmpModel) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&ModelDto::from(model))?;
    text.push('\n');
    Ok(text)
}

pub fn model_from_json(text: &str) -> Result<DmpModel> {
    let dto: ModelDto = serde_json::from_str(text)?;
    dto.into_model()
}

pub fn save_model(path: &Path, model: &DmpModel) -> Result<()> {
    fs::write(path, model_to_json(model)?).map_err(|e| DmpError::Io(format!("{}: {e}", path.display())))
}

pub fn load_model(path: &Path) -> Result<DmpModel> {
    let text = fs::read_to_string(path).map_err(|e| DmpError::Io(format!("{}: {e}", path.display())))?;
    model_from_json(&text).map_err(|e| with_path(e, path))
}
