//! Deterministic text output. Numbers use the shortest representation that
//! parses back to the same double; files are written via a sibling temporary
//! and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use cvlattice::{CMatrix, RMatrix};

use crate::error::{CliError, CliResult};

pub fn real_matrix_csv(m: &RMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", m[(i, j)]);
        }
        out.push('\n');
    }
    out
}

/// Each complex entry becomes two adjacent columns `re,im`.
pub fn complex_matrix_csv(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{},{}", m[(i, j)].re, m[(i, j)].im);
        }
        out.push('\n');
    }
    out
}

pub fn column_csv(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

/// Writes `contents` to `dir/name` atomically and returns the final path.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).map_err(|e| io_error(&tmp, e))?;
    file.write_all(contents.as_bytes()).map_err(|e| io_error(&tmp, e))?;
    file.sync_all().map_err(|e| io_error(&tmp, e))?;
    drop(file);
    fs::rename(&tmp, &target).map_err(|e| io_error(&target, e))?;
    Ok(target)
}
