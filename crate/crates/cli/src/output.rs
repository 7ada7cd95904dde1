use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::Format;

/// Collects the artifacts of one run and writes each atomically.
pub struct Emitter {
    dir: PathBuf,
    formats: Vec<Format>,
    written: Vec<String>,
}

impl Emitter {
    pub fn new(dir: PathBuf, formats: &[Format]) -> Result<Self> {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let formats = if formats.is_empty() {
            vec![Format::Csv]
        } else {
            formats.to_vec()
        };
        Ok(Self {
            dir,
            formats,
            written: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        sropkit::io::write_atomic(&path, bytes)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn npy(&mut self, name: &str, t: &sropkit::io::NpyTensor) -> Result<()> {
        sropkit::io::write_npy_file(self.dir.join(name), t)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Writes `stem.csv`, `stem.json` and `stem.svg` as requested; the closures
    /// only run for requested formats.
    pub fn emit(
        &mut self,
        stem: &str,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> serde_json::Value,
        svg: impl FnOnce() -> String,
    ) -> Result<()> {
        if self.wants(Format::Csv) {
            self.file(&format!("{stem}.csv"), csv().as_bytes())?;
        }
        if self.wants(Format::Json) {
            let mut text = serde_json::to_string_pretty(&json())?;
            text.push('\n');
            self.file(&format!("{stem}.json"), text.as_bytes())?;
        }
        if self.wants(Format::Svg) {
            self.file(&format!("{stem}.svg"), svg().as_bytes())?;
        }
        Ok(())
    }

    pub fn finish(mut self, args: &[String], cwd: &Path) -> Result<Vec<String>> {
        let mut outputs = self.written.clone();
        outputs.push(RUN_FILE.to_string());
        let sidecar = RunRecord {
            tool: "sropkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            cwd: cwd.to_path_buf(),
            args: args.to_vec(),
            outputs: outputs.clone(),
        };
        let mut text = serde_json::to_string_pretty(&sidecar)?;
        text.push('\n');
        self.file(RUN_FILE, text.as_bytes())?;
        Ok(outputs)
    }
}

pub const RUN_FILE: &str = "run.json";

/// The `run.json` sidecar: enough to repeat a run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool: String,
    pub version: String,
    /// Working directory the arguments are relative to.
    pub cwd: PathBuf,
    /// Command-line arguments after the program name.
    pub args: Vec<String>,
    pub outputs: Vec<String>,
}
