//! CSV tables and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

/// A numeric table with a one-line header and `# key,value` footer lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    /// `None` is written as an empty cell.
    pub rows: Vec<Vec<Option<f64>>>,
    pub footer: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Some(v)).collect());
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.footer.push((key.to_string(), value.to_string()));
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn footer_value(&self, key: &str) -> Option<&str> {
        self.footer
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map_or_else(String::new, |v| v.to_string()))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (k, v) in &self.footer {
            out.push_str(&format!("# {k},{v}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Invalid("empty table".into()))?;
        let mut t = Table {
            columns: header.split(',').map(str::to_string).collect(),
            ..Default::default()
        };
        for (i, line) in lines.enumerate() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once(',').unwrap_or((rest, ""));
                t.note(k, v);
                continue;
            }
            let row = line
                .split(',')
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse().map(Some).map_err(|_| Error::Config {
                            line: i + 2,
                            message: format!("bad cell {c:?}"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != t.columns.len() {
                return Err(Error::Config {
                    line: i + 2,
                    message: format!("expected {} cells", t.columns.len()),
                });
            }
            t.rows.push(row);
        }
        Ok(t)
    }
}

/// Writes through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub alpha: f64,
    pub beta: f64,
    pub nu_sharp: f64,
    pub gamma_sharp: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub timestamp: String,
    pub command: String,
    pub constants: DerivedConstants,
    pub summary: BTreeMap<String, String>,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.toml";

/// Collects emitted files for one run directory.
pub struct OutputSet {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            records: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.records.retain(|r| r.file != name);
        self.records.push(OutputRecord {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write(name, table.to_csv().as_bytes())
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    /// Writes the manifest; call after every other output.
    pub fn finish(
        self,
        config: &ExperimentConfig,
        constants: DerivedConstants,
        summary: BTreeMap<String, String>,
    ) -> Result<PathBuf> {
        let manifest = RunManifest {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: config.command.map_or("", |c| c.as_str()).to_string(),
            constants,
            summary,
            config: config.clone(),
            outputs: self.records,
        };
        let text = toml::to_string(&manifest)
            .map_err(|e| Error::Invalid(format!("serializing manifest: {e}")))?;
        let path = self.dir.join(MANIFEST_NAME);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Checks every checksum listed in a manifest against the files beside it.
/// Returns the number of files verified.
pub fn verify_manifest(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path)?;
    let value: toml::Value = toml::from_str(&text)
        .map_err(|e| Error::Invalid(format!("manifest {}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let outputs = value
        .get("outputs")
        .and_then(|o| o.as_array())
        .ok_or_else(|| Error::Invalid("manifest lists no outputs".into()))?;
    for o in outputs {
        let file = o.get("file").and_then(|v| v.as_str()).unwrap_or_default();
        let want = o.get("sha256").and_then(|v| v.as_str()).unwrap_or_default();
        let got = sha256_hex(&fs::read(dir.join(file))?);
        if got != want {
            return Err(Error::Invalid(format!("checksum mismatch for {file}")));
        }
    }
    Ok(outputs.len())
}
