//! CSV serialization of measurement records and JSON-lines sidecar output.
//!
//! Record files are RFC-style comma-separated with `#`-prefixed metadata
//! header lines carrying the dynamics and kernel keys, then a `step,q_1..q_d`
//! header row and one row per step.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use tracksim_core::classical::MeasurementRecord;

use crate::config::{dynamics_from_keys, dynamics_to_keys, ConfigError, RawConfig};

#[derive(Debug)]
pub enum RecordIoError {
    Io(std::io::Error),
    Parse(String),
}

impl std::fmt::Display for RecordIoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RecordIoError::Io(e) => write!(f, "io error: {e}"),
            RecordIoError::Parse(m) => write!(f, "record parse error: {m}"),
        }
    }
}

impl std::error::Error for RecordIoError {}

impl From<std::io::Error> for RecordIoError {
    fn from(e: std::io::Error) -> Self {
        RecordIoError::Io(e)
    }
}

type Result<T> = std::result::Result<T, RecordIoError>;

/// Write one record in the canonical single-track format.
pub fn write_record_csv(
    path: &Path,
    record: &MeasurementRecord,
    extra_meta: &[(String, String)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# tracksim record")?;
    if let Some(dynamics) = &record.dynamics {
        for (k, v) in dynamics_to_keys(dynamics) {
            writeln!(w, "# {k} = {v}")?;
        }
    }
    for (k, v) in extra_meta {
        writeln!(w, "# {k} = {v}")?;
    }
    write_header_row(&mut w, record.dim())?;
    for (step, q) in record.outcomes.iter().enumerate() {
        write_row(&mut w, step, q)?;
    }
    w.flush()?;
    Ok(())
}

fn write_header_row<W: Write>(w: &mut W, dim: usize) -> Result<()> {
    let cols: Vec<String> = (1..=dim).map(|i| format!("q_{i}")).collect();
    writeln!(w, "step,{}", cols.join(","))?;
    Ok(())
}

fn write_row<W: Write>(w: &mut W, step: usize, q: &DVector<f64>) -> Result<()> {
    let vals: Vec<String> = q.iter().map(|v| v.to_string()).collect();
    writeln!(w, "{step},{}", vals.join(","))?;
    Ok(())
}

/// Read a canonical record file; the dynamics metadata is reconstructed from
/// the `#` header lines when present.
pub fn read_record_csv(path: &Path) -> Result<MeasurementRecord> {
    let reader = BufReader::new(File::open(path)?);
    let mut meta_text = String::new();
    let mut header: Option<Vec<String>> = None;
    let mut outcomes: Vec<DVector<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let row_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(meta) = trimmed.strip_prefix('#') {
            if meta.contains('=') {
                meta_text.push_str(meta.trim());
                meta_text.push('\n');
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        match &header {
            None => {
                if fields.first() != Some(&"step") {
                    return Err(RecordIoError::Parse(format!(
                        "row {row_no}: expected header starting with `step`"
                    )));
                }
                header = Some(fields.iter().map(|s| s.to_string()).collect());
            }
            Some(cols) => {
                if fields.len() != cols.len() {
                    return Err(RecordIoError::Parse(format!(
                        "row {row_no}: expected {} fields, got {}",
                        cols.len(),
                        fields.len()
                    )));
                }
                let values: std::result::Result<Vec<f64>, _> =
                    fields[1..].iter().map(|f| f.parse::<f64>()).collect();
                let values = values.map_err(|_| {
                    RecordIoError::Parse(format!("row {row_no}: non-numeric outcome"))
                })?;
                outcomes.push(DVector::from_row_slice(&values));
            }
        }
    }
    if header.is_none() {
        return Err(RecordIoError::Parse("file has no header row".into()));
    }
    let dynamics = if meta_text.is_empty() {
        None
    } else {
        let mut raw = RawConfig::parse(&meta_text)
            .map_err(|ConfigError(m)| RecordIoError::Parse(m))?;
        dynamics_from_keys(&mut raw).map_err(|ConfigError(m)| RecordIoError::Parse(m))?
        // other metadata keys (kernel etc.) are informational; ignore them
    };
    MeasurementRecord::new(outcomes, dynamics)
        .map_err(|e| RecordIoError::Parse(e.to_string()))
}

/// Writer for a combined multi-trial CSV with a leading `trial` column.
pub struct MultiTrackWriter {
    w: BufWriter<File>,
    dim: usize,
}

impl MultiTrackWriter {
    pub fn create(path: &Path, dim: usize, meta: &[(String, String)]) -> Result<Self> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# tracksim records")?;
        for (k, v) in meta {
            writeln!(w, "# {k} = {v}")?;
        }
        let cols: Vec<String> = (1..=dim).map(|i| format!("q_{i}")).collect();
        writeln!(w, "trial,step,{}", cols.join(","))?;
        Ok(MultiTrackWriter { w, dim })
    }

    pub fn push(&mut self, trial: usize, record: &MeasurementRecord) -> Result<()> {
        assert_eq!(record.dim(), self.dim);
        for (step, q) in record.outcomes.iter().enumerate() {
            let vals: Vec<String> = q.iter().map(|v| v.to_string()).collect();
            writeln!(self.w, "{trial},{step},{}", vals.join(","))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// JSON-lines sidecar writer.
pub struct JsonlWriter {
    w: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(JsonlWriter {
            w: BufWriter::new(File::create(path)?),
        })
    }

    pub fn push<T: serde::Serialize>(&mut self, row: &T) -> Result<()> {
        let line = serde_json::to_string(row)
            .map_err(|e| RecordIoError::Parse(format!("jsonl serialize: {e}")))?;
        writeln!(self.w, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Generic small-table CSV writer with `#` metadata lines.
pub fn write_table_csv(
    path: &Path,
    meta: &[(String, String)],
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in meta {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", vals.join(","))?;
    }
    w.flush()?;
    Ok(())
}
