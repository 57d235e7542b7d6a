use std::fs;
use std::path::{Path, PathBuf};

use alphaloss::AlphaParam;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;

use crate::args::Command;
use crate::error::{CliError, CliResult};

/// Reals with 17 significant digits; non-finite values as `inf`, `-inf`, `NaN`.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

pub fn alpha(a: AlphaParam) -> String {
    a.to_string()
}

/// An in-memory CSV table, written to disk in one piece.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> CliResult<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| CliError::Csv(e.into_error().into()))
    }

    pub fn write_to(self, path: &Path) -> CliResult<()> {
        let bytes = self.into_bytes()?;
        write_file(path, &bytes)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| CliError::Write {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Record of one run, written next to its CSV output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub argv: Vec<String>,
    pub flags: Command,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &Command, argv: Vec<String>, started: DateTime<Utc>) -> Self {
        RunManifest {
            command: command.name(),
            argv,
            flags: command.clone(),
            seed: command.seed(),
            version: env!("CARGO_PKG_VERSION"),
            started_at: timestamp(started),
            finished_at: String::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn finish(mut self, out: &Path) -> CliResult<PathBuf> {
        self.finished_at = timestamp(Utc::now());
        let path = manifest_path(out);
        let mut json = serde_json::to_vec_pretty(&self)?;
        json.push(b'\n');
        write_file(&path, &json)?;
        Ok(path)
    }
}

fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}
