//! Profile files, trace CSV and report JSON.
//!
//! A profile file starts with a `# n=<dim> N=<intervals>` line followed by
//! a `psi,rho` CSV table with `N + 1` rows.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::axigraph::RadialProfile;
use crate::error::ShellError;
use crate::flowcore::FlowStatus;
use crate::functionals::FunctionalRecord;
use crate::spaceform::WarpModel;

fn format_error(path: &Path, message: impl Into<String>) -> ShellError {
    ShellError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn parse_header(path: &Path, line: &str) -> Result<(usize, usize), ShellError> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| format_error(path, "missing `# n=.. N=..` header"))?;
    let mut dim = None;
    let mut intervals = None;
    for token in body.split_whitespace() {
        match token.split_once('=') {
            Some(("n", v)) => dim = v.parse().ok(),
            Some(("N", v)) => intervals = v.parse().ok(),
            _ => {}
        }
    }
    match (dim, intervals) {
        (Some(n), Some(big)) => Ok((n, big)),
        _ => Err(format_error(path, format!("malformed header `{line}`"))),
    }
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    psi: f64,
    rho: f64,
}

pub fn read_profile(path: &Path) -> Result<RadialProfile, ShellError> {
    let file = File::open(path).map_err(|e| ShellError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| ShellError::io(path, e))?;
    let (dim, intervals) = parse_header(path, header.trim())?;
    let mut table = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut rho = Vec::with_capacity(intervals + 1);
    for (k, row) in table.deserialize::<ProfileRow>().enumerate() {
        let row = row.map_err(|e| format_error(path, e.to_string()))?;
        let expected = k as f64 * std::f64::consts::PI / intervals as f64;
        if (row.psi - expected).abs() > 1e-9 {
            return Err(format_error(
                path,
                format!("row {k}: psi = {} is off the uniform grid", row.psi),
            ));
        }
        rho.push(row.rho);
    }
    if rho.len() != intervals + 1 {
        return Err(format_error(
            path,
            format!("expected {} rows, found {}", intervals + 1, rho.len()),
        ));
    }
    let model = WarpModel::de_sitter(dim).map_err(|e| format_error(path, e.to_string()))?;
    RadialProfile::new(model, rho).map_err(|e| format_error(path, e.to_string()))
}

pub fn write_profile(path: &Path, profile: &RadialProfile) -> Result<(), ShellError> {
    let file = File::create(path).map_err(|e| ShellError::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# n={} N={}", profile.dim(), profile.intervals())
        .map_err(|e| ShellError::io(path, e))?;
    let mut table = csv::Writer::from_writer(out);
    let io = |e: csv::Error| format_error(path, e.to_string());
    table.write_record(["psi", "rho"]).map_err(io)?;
    for (psi, rho) in profile.psi().iter().zip(profile.rho()) {
        table
            .write_record([psi.to_string(), rho.to_string()])
            .map_err(io)?;
    }
    table.flush().map_err(|e| ShellError::io(path, e))
}

/// Trace CSV written one record at a time and flushed after each row.
pub struct TraceWriter {
    path: PathBuf,
    table: csv::Writer<BufWriter<File>>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> Result<Self, ShellError> {
        let file = File::create(path).map_err(|e| ShellError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            table: csv::Writer::from_writer(BufWriter::new(file)),
        })
    }

    pub fn append(&mut self, record: &FunctionalRecord) -> Result<(), ShellError> {
        self.table
            .serialize(record)
            .map_err(|e| format_error(&self.path, e.to_string()))?;
        self.table.flush().map_err(|e| ShellError::io(&self.path, e))
    }
}

pub fn read_trace(path: &Path) -> Result<Vec<FunctionalRecord>, ShellError> {
    let mut table = csv::Reader::from_path(path).map_err(|e| format_error(path, e.to_string()))?;
    table
        .deserialize()
        .map(|r| r.map_err(|e| format_error(path, e.to_string())))
        .collect()
}

/// Final summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: FlowStatus,
    pub r_infinity: Option<f64>,
    pub area0: f64,
    pub phi1_gap: Option<f64>,
    pub minkowski_gap_initial: f64,
    pub wall_time: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ShellError> {
    let file = File::create(path).map_err(|e| ShellError::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| format_error(path, e.to_string()))?;
    writeln!(out).map_err(|e| ShellError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let model = WarpModel::de_sitter(3).unwrap();
        let p = RadialProfile::legendre(model, 40, 1.1, 0.07, 3).unwrap();
        write_profile(&path, &p).unwrap();
        let back = read_profile(&path).unwrap();
        assert_eq!(back.rho(), p.rho());
        assert_eq!(back.dim(), 3);
    }

    #[test]
    fn malformed_profiles_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "psi,rho\n0,1\n").unwrap();
        assert!(matches!(read_profile(&path), Err(ShellError::Format { .. })));
        let mut text = String::from("# n=2 N=16\npsi,rho\n");
        for k in 0..=15 {
            text.push_str(&format!("{},1.0\n", k as f64 * std::f64::consts::PI / 16.0));
        }
        std::fs::write(&path, &text).unwrap();
        assert!(matches!(read_profile(&path), Err(ShellError::Format { .. })));
        assert!(matches!(
            read_profile(&dir.path().join("absent.csv")),
            Err(ShellError::Io { .. })
        ));
    }
}
