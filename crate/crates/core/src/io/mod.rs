//! Run artifacts: VTK snapshots, plot-over-line CSV, audit log, manifest.

mod line;
mod vtk;

pub use line::{
    read_line_csv, sample_line, write_line_csv, InterfaceSample, LineSample, LINE_CSV_COLUMNS, LINE_CSV_HEADER,
};
pub use vtk::{bulk_grid, interface_grid, write_vtk, Series, SeriesEntry, VtkGrid, VTK_LINE, VTK_TRIANGLE};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::solver::{NewtonOptions, StepReport};

/// JSON-lines log with one [`StepReport`] per accepted step.
pub struct AuditLog<W: Write> {
    out: W,
    pub lines: usize,
}

impl<W: Write> AuditLog<W> {
    pub fn new(out: W) -> Self {
        Self { out, lines: 0 }
    }

    pub fn record(&mut self, report: &StepReport) -> Result<(), Error> {
        let line = serde_json::to_string(report).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(self.out, "{line}")?;
        self.lines += 1;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<(), Error> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn read_audit(text: &str) -> Result<Vec<StepReport>, Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Format(e.to_string())))
        .collect()
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub solve_seconds: f64,
    pub output_seconds: f64,
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Scenario file path, or `case <id>` for built-in cases.
    pub scenario: String,
    /// SHA-256 of the scenario file, or of the resolved configuration.
    pub scenario_hash: String,
    pub mode: String,
    pub resolution: f64,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub newton: NewtonOptions,
    pub output_dir: String,
    pub code_version: String,
    pub seed: Option<u64>,
    pub timings: Timings,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), Error> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Format(e.to_string()))
    }
}
