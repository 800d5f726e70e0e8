//! Report documents and their CSV companions.
//!
//! CSV files have a header row, comma separators, `.` decimals and LF line
//! endings. Floats are written in Rust's shortest round-trip scientific form.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audit::{AuditConfig, AuditReport, AuditTiming, TensorInfo, TestReport, TestStatus, Verdict};
use crate::error::{Error, Result};
use crate::spectrum::{ModeSpectra, SpectrumReport, UniquenessPrediction};

pub const SCHEMA_VERSION: u32 = 1;

/// Audit report as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub config: AuditConfig,
    pub tensor: TensorInfo,
    /// Preprocessing applied to the audited tensor (always `none`).
    pub centering: String,
    pub scale: f64,
    pub threshold: f64,
    pub per_test: Vec<TestReport>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spectra: Option<ModeSpectra>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub prediction: Option<UniquenessPrediction>,
    /// Free-form description of how the input tensor was produced.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<serde_json::Value>,
    pub timing: AuditTiming,
}

impl ReportFile {
    pub fn from_audit(report: AuditReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config: report.config,
            tensor: report.tensor,
            centering: report.centering,
            scale: report.scale,
            threshold: report.threshold,
            per_test: report.tests,
            verdict: report.verdict,
            spectra: None,
            prediction: None,
            provenance: None,
            timing: report.timing,
        }
    }

    pub fn with_spectrum(mut self, spectrum: &SpectrumReport) -> Self {
        self.spectra = Some(ModeSpectra {
            centering: spectrum.centering,
            spectra: spectrum.spectra.clone(),
        });
        self.prediction = Some(spectrum.prediction.clone());
        self
    }

    pub fn with_provenance(mut self, provenance: serde_json::Value) -> Self {
        self.provenance = Some(provenance);
        self
    }

    /// Check the schema version and that completed tests carry `T` distances.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::data(format!(
                "unsupported report schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        for t in &self.per_test {
            if t.status == TestStatus::Completed && t.d_series.len() != self.config.iterations {
                return Err(Error::data(format!(
                    "test {} has {} distances, expected {}",
                    t.index,
                    t.d_series.len(),
                    self.config.iterations
                )));
            }
        }
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)
            .map_err(|e| Error::data(format!("malformed report JSON: {e}")))?;
        r.validate()?;
        Ok(r)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(path.as_ref(), &self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Write `d_series.csv`, `objectives.csv` and, when present,
    /// `spectra.csv` into `dir`. Returns the written paths.
    pub fn write_csv_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut put = |name: &str, body: String| -> Result<()> {
            let p = dir.join(name);
            write_text(&p, &body)?;
            written.push(p);
            Ok(())
        };
        put("d_series.csv", d_series_csv(&self.per_test))?;
        put("objectives.csv", objectives_csv(&self.per_test))?;
        if let Some(s) = &self.spectra {
            put("spectra.csv", spectra_csv(&s.spectra))?;
        }
        Ok(written)
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// One row per iteration, one column per test. Missing values (failed
/// tests) are left empty.
pub fn d_series_csv(tests: &[TestReport]) -> String {
    let mut out = String::from("iteration");
    for t in tests {
        write!(out, ",test_{}", t.index).unwrap();
    }
    out.push('\n');
    let rows = tests.iter().map(|t| t.d_series.len()).max().unwrap_or(0);
    for it in 0..rows {
        write!(out, "{}", it + 1).unwrap();
        for t in tests {
            out.push(',');
            if let Some(&d) = t.d_series.get(it) {
                out.push_str(&num(d));
            }
        }
        out.push('\n');
    }
    out
}

/// Long format: `test,start,iteration,objective`.
pub fn objectives_csv(tests: &[TestReport]) -> String {
    let mut out = String::from("test,start,iteration,objective\n");
    for t in tests {
        for tr in &t.objective_traces {
            for (it, v) in tr.objective.iter().enumerate() {
                writeln!(out, "{},{},{},{}", t.index, tr.label.as_str(), it + 1, num(*v)).unwrap();
            }
        }
    }
    out
}

/// Long format: `mode,rank,value`, ranks 1-based.
pub fn spectra_csv(spectra: &[Vec<f64>; 3]) -> String {
    let mut out = String::from("mode,rank,value\n");
    for (m, s) in spectra.iter().enumerate() {
        for (r, v) in s.iter().enumerate() {
            writeln!(out, "{},{},{}", m + 1, r + 1, num(*v)).unwrap();
        }
    }
    out
}
