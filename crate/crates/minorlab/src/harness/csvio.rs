//! CSV and manifest output. All floating-point fields are written with 17
//! significant digits so files round-trip exactly; rows are emitted in a
//! canonical order upstream, which makes outputs byte-identical across
//! worker counts.

use crate::error::HarnessError;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub enum Field {
    U(u64),
    I(i64),
    F(f64),
    S(String),
}

impl Field {
    fn render(&self, out: &mut String) {
        match self {
            Field::U(v) => {
                let _ = write!(out, "{v}");
            }
            Field::I(v) => {
                let _ = write!(out, "{v}");
            }
            Field::F(v) => {
                if v.is_nan() {
                    out.push_str("nan");
                } else {
                    let _ = write!(out, "{v:.16e}");
                }
            }
            Field::S(v) => out.push_str(v),
        }
    }
}

/// A CSV file accumulated in memory, then written and digested.
pub struct CsvFile {
    name: String,
    body: String,
    rows: u64,
}

impl CsvFile {
    pub fn new(name: impl Into<String>, header: &str) -> Self {
        let mut body = String::new();
        body.push_str(header);
        body.push('\n');
        CsvFile { name: name.into(), body, rows: 0 }
    }

    pub fn row(&mut self, fields: &[Field]) {
        for (k, f) in fields.iter().enumerate() {
            if k > 0 {
                self.body.push(',');
            }
            f.render(&mut self.body);
        }
        self.body.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// Record of one written output file.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub rows: u64,
    pub bytes: u64,
}

/// Writes data files and finalizes with an atomically renamed manifest, so a
/// killed run leaves either no manifest or a complete one.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<OutputRecord>,
    paths: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| HarnessError::io(dir.display().to_string(), e))?;
        Ok(OutputDir { dir, written: Vec::new(), paths: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_csv(&mut self, file: CsvFile) -> Result<(), HarnessError> {
        let path = self.dir.join(&file.name);
        let digest = Sha256::digest(file.body.as_bytes());
        fs::write(&path, file.body.as_bytes())
            .map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        self.written.push(OutputRecord {
            file: file.name.clone(),
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            rows: file.rows,
            bytes: file.body.len() as u64,
        });
        self.paths.push(path);
        Ok(())
    }

    pub fn outputs(&self) -> &[OutputRecord] {
        &self.written
    }

    /// Write `manifest.json` atomically (temp file + rename).
    pub fn finalize(self, manifest: &serde_json::Value) -> Result<PathBuf, HarnessError> {
        let path = self.dir.join("manifest.json");
        let tmp = self.dir.join(".manifest.json.tmp");
        let body = serde_json::to_string_pretty(manifest)
            .map_err(|e| HarnessError::Config(format!("manifest serialization: {e}")))?;
        {
            let mut f = fs::File::create(&tmp)
                .map_err(|e| HarnessError::io(tmp.display().to_string(), e))?;
            f.write_all(body.as_bytes())
                .map_err(|e| HarnessError::io(tmp.display().to_string(), e))?;
            f.sync_all().map_err(|e| HarnessError::io(tmp.display().to_string(), e))?;
        }
        fs::rename(&tmp, &path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
        Ok(path)
    }

    /// Best-effort removal of already written outputs after a failure.
    pub fn cleanup(self) {
        for p in self.paths {
            let _ = fs::remove_file(p);
        }
    }
}
