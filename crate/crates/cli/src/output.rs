//! Artifact writers. Every file is a pure function of its inputs, so a
//! fixed seed reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Pretty JSON with a trailing newline. Floats use the shortest decimal
/// that parses back to the same value.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_owned(),
        source,
    })
}

/// A header line plus one line per row; cells are already formatted.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> CliResult<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        let _ = writeln!(text, "{}", row.join(","));
    }
    write_text(path, &text)
}

/// Run record written next to every command's artifacts.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub seed: u64,
    pub tool_version: &'a str,
    pub outputs: Vec<String>,
    pub config: &'a RunConfig,
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    outputs: &[PathBuf],
) -> CliResult<()> {
    let manifest = Manifest {
        command,
        seed: config.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        outputs: outputs
            .iter()
            .map(|p| {
                p.file_name()
                    .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
            })
            .collect(),
        config,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}
