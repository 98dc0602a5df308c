//! Artifact writing: every file goes to a temp file in the target directory and is renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64;
use serde::Serialize;
use tempfile::NamedTempFile;

use crate::config::ExperimentConfig;

pub const ENGINE: &str = "lattres";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    engine: &'static str,
    version: &'static str,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec_hash: Option<&'a str>,
    config: &'a ExperimentConfig,
    result: &'a T,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes `<output_dir>/<command>.json` wrapping `result` with the engine version and config hash.
pub fn write_report<T: Serialize>(config: &ExperimentConfig, spec_hash: Option<&str>, result: &T) -> Result<PathBuf> {
    let env = Envelope { engine: ENGINE, version: VERSION, config_hash: config.hash(), spec_hash, config, result };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    let path = config.output_dir.join(format!("{}.json", config.command));
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

/// A CSV table under construction.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("writing to memory");
        Table { writer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("writing to memory");
    }

    pub fn write(self, config: &ExperimentConfig, name: &str) -> Result<PathBuf> {
        let bytes = self.writer.into_inner().map_err(|e| anyhow::anyhow!("flushing csv: {e}"))?;
        let path = config.output_dir.join(format!("{name}.csv"));
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn re_im(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}
