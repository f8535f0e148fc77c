//! Reading sources and writing compiled artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use codiag_core::export::{default_queries, to_dot, to_uppaal, ExportError};
use codiag_core::{Nta, Query};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Export(#[from] ExportError),
}

pub fn read(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io { path: path.to_path_buf(), source })
}

pub fn write(path: &Path, contents: &str) -> Result<(), FileError> {
    fs::write(path, contents).map_err(|source| FileError::Io { path: path.to_path_buf(), source })
}

/// File name without directory and extension, used to name outputs.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".to_string())
}

/// Queries of a query file: one per line, blank lines and `//` comments
/// skipped.
pub fn query_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("//"))
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
    Uppaal,
}

/// Rendered artifacts as `(extension, contents)` pairs.
pub fn render(nta: &Nta, format: Format, queries: &[Query]) -> Result<Vec<(&'static str, String)>, FileError> {
    Ok(match format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(nta).expect("networks always serialize");
            text.push('\n');
            vec![("json", text)]
        }
        Format::Dot => vec![("dot", to_dot(nta))],
        Format::Uppaal => {
            let defaults;
            let queries = if queries.is_empty() {
                defaults = default_queries(nta);
                &defaults
            } else {
                queries
            };
            let model = to_uppaal(nta, queries)?;
            vec![("xml", model.xml), ("q", model.queries)]
        }
    })
}

/// Writes every artifact as `<dir>/<stem>.<ext>` and returns the paths.
pub fn write_all(dir: &Path, stem: &str, artifacts: &[(&'static str, String)]) -> Result<Vec<PathBuf>, FileError> {
    fs::create_dir_all(dir).map_err(|source| FileError::Io { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for (ext, text) in artifacts {
        let path = dir.join(format!("{stem}.{ext}"));
        write(&path, text)?;
        out.push(path);
    }
    Ok(out)
}
