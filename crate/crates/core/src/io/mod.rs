//! Tensor containers, dataset formats and the run manifest.

pub mod datasets;
pub mod manifest;
pub mod npy;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use datasets::{read_cifar10_batch, read_mnist_idx, LabeledImages, CIFAR_FROG};
pub use manifest::{read_manifest, write_manifest, LayerEntry, RunManifest, WeightsOrigin};
pub use npy::{read_npy, read_npy_file, write_npy, write_npy_file, Dtype, NpyData, NpyTensor};

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}
