use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{srop_2d, SpectralConfig, SropValue};
use crate::error::{Error, Result};

/// Where a feature map came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    Randomized,
    Pretrained,
    InputImage,
}

/// A `channels x size x size` activation volume, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapTensor {
    data: Vec<f32>,
    channels: usize,
    size: usize,
    layer_name: String,
    source: MapSource,
}

impl FeatureMapTensor {
    pub fn new(
        data: Vec<f32>,
        channels: usize,
        size: usize,
        layer_name: impl Into<String>,
        source: MapSource,
    ) -> Result<Self> {
        if channels == 0 {
            return Err(Error::InvalidInput("feature map has no channels".into()));
        }
        if size < 3 {
            return Err(Error::TooSmall(size));
        }
        if data.len() != channels * size * size {
            return Err(Error::InvalidInput(format!(
                "{} values do not fill {channels}x{size}x{size}",
                data.len()
            )));
        }
        Ok(Self {
            data,
            channels,
            size,
            layer_name: layer_name.into(),
            source,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn layer_name(&self) -> &str {
        &self.layer_name
    }

    pub fn source(&self) -> MapSource {
        self.source
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let plane = self.size * self.size;
        &self.data[c * plane..(c + 1) * plane]
    }
}

/// Per-channel roll-off points; `None` marks a channel without spectral energy.
pub fn srop_feature_map(t: &FeatureMapTensor, config: &SpectralConfig) -> Result<Vec<Option<SropValue>>> {
    config.validate()?;
    (0..t.channels)
        .into_par_iter()
        .map(|c| match srop_2d(t.channel(c), t.size, t.size, config) {
            Ok(v) => Ok(Some(v)),
            Err(Error::ZeroEnergy) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}
