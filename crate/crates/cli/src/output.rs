//! File helpers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use tensoraudit::{Error, FactorMatrix, Result};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("malformed JSON in {}: {e}", path.display())))
}

/// `t.tns3` -> `t.tns3.json`.
pub fn sidecar_path(tensor: &Path) -> PathBuf {
    let mut s = tensor.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Provenance stored next to a tensor file, if any.
pub fn read_sidecar(tensor: &Path) -> Result<Option<Value>> {
    let p = sidecar_path(tensor);
    if p.is_file() {
        read_json(&p).map(Some)
    } else {
        Ok(None)
    }
}

/// Header `row,c1,..,cm`, one line per matrix row.
pub fn write_matrix_csv(path: &Path, m: &FactorMatrix) -> Result<()> {
    let mut out = String::from("row");
    for c in 0..m.cols() {
        out.push_str(&format!(",c{}", c + 1));
    }
    out.push('\n');
    for r in 0..m.rows() {
        out.push_str(&(r + 1).to_string());
        for c in 0..m.cols() {
            out.push_str(&format!(",{:e}", m.get(r, c)));
        }
        out.push('\n');
    }
    write_text(path, &out)
}
