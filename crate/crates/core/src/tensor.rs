use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_npy_file, NpyData, NpyTensor};
use crate::spectral::{FeatureMapTensor, MapSource};

/// Dense `channels x size x size` f32 volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub channels: usize,
    pub size: usize,
    pub data: Vec<f32>,
}

impl Tensor3 {
    pub fn new(channels: usize, size: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != channels * size * size {
            return Err(Error::InvalidInput(format!(
                "{} values do not fill {channels}x{size}x{size}",
                data.len()
            )));
        }
        Ok(Self { channels, size, data })
    }

    pub fn zeros(channels: usize, size: usize) -> Self {
        Self {
            channels,
            size,
            data: vec![0.0; channels * size * size],
        }
    }

    pub fn filled(channels: usize, size: usize, value: f32) -> Self {
        Self {
            channels,
            size,
            data: vec![value; channels * size * size],
        }
    }

    pub fn plane_len(&self) -> usize {
        self.size * self.size
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let p = self.plane_len();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let p = self.plane_len();
        &mut self.data[c * p..(c + 1) * p]
    }

    pub fn to_feature_map(&self, name: &str, source: MapSource) -> Result<FeatureMapTensor> {
        FeatureMapTensor::new(self.data.clone(), self.channels, self.size, name, source)
    }

    /// Rec.601 luminance of a 3-channel volume.
    pub fn luminance(&self) -> Result<Tensor3> {
        if self.channels != 3 {
            return Err(Error::InvalidInput(format!(
                "luminance needs 3 channels, got {}",
                self.channels
            )));
        }
        let (r, g, b) = (self.channel(0), self.channel(1), self.channel(2));
        let data = (0..self.plane_len())
            .map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
            .collect();
        Tensor3::new(1, self.size, data)
    }

    /// Repeats a single channel to three.
    pub fn to_rgb(&self) -> Result<Tensor3> {
        match self.channels {
            3 => Ok(self.clone()),
            1 => Ok(Tensor3 {
                channels: 3,
                size: self.size,
                data: self.data.repeat(3),
            }),
            c => Err(Error::InvalidInput(format!("cannot make RGB from {c} channels"))),
        }
    }
}

/// Splits an NPY array into square images.
///
/// Accepted layouts: `(n, n)`, `(n, n, 3)` (HWC), `(3, n, n)` (CHW), and batches
/// `(N, n, n)`, `(N, n, n, 3)` or `(N, 3, n, n)`. `u8` data is scaled to `[0, 1]`;
/// float data is taken as is.
pub fn images_from_npy(t: &NpyTensor) -> Result<Vec<Tensor3>> {
    let scale = if matches!(t.data(), NpyData::U8(_)) {
        255.0
    } else {
        1.0
    };
    let values: Vec<f32> = t.to_f32().into_iter().map(|v| v / scale).collect();
    let s = t.shape();
    let bad = || Error::InvalidInput(format!("cannot interpret shape {s:?} as square images"));
    let (count, channels, size, hwc) = match *s {
        [h, w] if h == w => (1, 1, h, false),
        [h, w, 3] if h == w => (1, 3, h, true),
        [3, h, w] if h == w => (1, 3, h, false),
        [n, h, w] if h == w => (n, 1, h, false),
        [n, h, w, 3] if h == w => (n, 3, h, true),
        [n, 3, h, w] if h == w => (n, 3, h, false),
        [n, 1, h, w] if h == w => (n, 1, h, false),
        _ => return Err(bad()),
    };
    let per = channels * size * size;
    Ok(values
        .chunks_exact(per)
        .take(count)
        .map(|chunk| {
            let data = if hwc {
                let mut out = vec![0.0; per];
                let plane = size * size;
                for (i, px) in chunk.chunks_exact(channels).enumerate() {
                    for (c, v) in px.iter().enumerate() {
                        out[c * plane + i] = *v;
                    }
                }
                out
            } else {
                chunk.to_vec()
            };
            Tensor3 { channels, size, data }
        })
        .collect())
}

/// `(height, width, channels)` of a single `(h, w)` or `(h, w, 3)` image array.
pub fn image_dims(t: &NpyTensor) -> Result<(usize, usize, usize)> {
    match *t.shape() {
        [h, w] => Ok((h, w, 1)),
        [h, w, 3] => Ok((h, w, 3)),
        ref s => Err(Error::InvalidInput(format!(
            "expected an (h, w) or (h, w, 3) image, got shape {s:?}"
        ))),
    }
}

/// Square `size x size` window at (`top`, `left`) of a single HWC image array.
pub fn crop_square(t: &NpyTensor, top: usize, left: usize, size: usize) -> Result<Tensor3> {
    let (h, w, c) = image_dims(t)?;
    if top + size > h || left + size > w {
        return Err(Error::InvalidInput(format!(
            "{size}x{size} crop at ({top}, {left}) leaves the {h}x{w} image"
        )));
    }
    let scale = if matches!(t.data(), NpyData::U8(_)) {
        255.0
    } else {
        1.0
    };
    let values = t.to_f32();
    let mut out = Tensor3::zeros(c, size);
    for ch in 0..c {
        let plane = out.channel_mut(ch);
        for y in 0..size {
            for x in 0..size {
                plane[y * size + x] = values[((top + y) * w + left + x) * c + ch] / scale;
            }
        }
    }
    Ok(out)
}

/// Loads every `.npy` file of a directory (sorted by name) as images.
pub fn load_image_dir(dir: impl AsRef<Path>) -> Result<Vec<Tensor3>> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "npy"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!("no .npy files in {}", dir.display())));
    }
    let mut out = Vec::new();
    for p in paths {
        out.extend(images_from_npy(&read_npy_file(&p)?)?);
    }
    Ok(out)
}
