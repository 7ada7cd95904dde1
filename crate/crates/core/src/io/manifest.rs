//! The run manifest: a JSON index of per-layer activation dumps.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "model_name": "resnet18",
//!   "weights_origin": "pretrained",
//!   "seed": 0,
//!   "input": { "description": "...", "resolution": 224, "count": 100 },
//!   "layers": [ { "name": "conv0", "file": "conv0.npy", "shape": [100, 64, 112, 112] } ]
//! }
//! ```
//!
//! File paths are relative to the manifest's directory. Unknown fields are ignored.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::npy::read_npy_file_header;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsOrigin {
    Randomized,
    Pretrained,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDescription {
    pub description: String,
    /// Spatial size of the network input, used to reference SROPs to the input band.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub name: String,
    pub file: PathBuf,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub model_name: String,
    pub weights_origin: WeightsOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub input: InputDescription,
    pub layers: Vec<LayerEntry>,
}

impl RunManifest {
    /// Checks names and that every referenced NPY file exists with the declared shape.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Manifest(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let mut names = HashSet::new();
        for layer in &self.layers {
            if !names.insert(layer.name.as_str()) {
                return Err(Error::Manifest(format!("duplicate layer `{}`", layer.name)));
            }
            let path = base_dir.join(&layer.file);
            if !path.is_file() {
                return Err(Error::Manifest(format!(
                    "layer `{}` references missing file {}",
                    layer.name,
                    path.display()
                )));
            }
            let header = read_npy_file_header(&path)
                .map_err(|e| Error::Manifest(format!("layer `{}`: {e}", layer.name)))?;
            if header.shape != layer.shape {
                return Err(Error::Manifest(format!(
                    "layer `{}` declares shape {:?} but {} holds {:?}",
                    layer.name,
                    layer.shape,
                    layer.file.display(),
                    header.shape
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Reads and validates a manifest; layer files are resolved next to it.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
    m.validate(path.parent().unwrap_or(Path::new(".")))?;
    Ok(m)
}

pub fn write_manifest(path: impl AsRef<Path>, m: &RunManifest) -> Result<()> {
    super::write_atomic(path.as_ref(), m.to_json().as_bytes())
}
