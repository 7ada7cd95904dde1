//! Layer-wise SROP profiles of randomized networks, of the max-pool benchmark
//! ladder, and of activation dumps described by a run manifest.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arch::ArchitectureSpec;
use super::engine::Network;
use super::layers;
use crate::error::{Error, Result};
use crate::io::manifest::{InputDescription, LayerEntry, RunManifest, SCHEMA_VERSION};
use crate::io::{read_npy_file, write_manifest, write_npy_file, NpyData, NpyTensor, WeightsOrigin};
use crate::spectral::{srop_feature_map, MapSource, SpectralConfig};
use crate::stats::{layer_stats, SropReport};
use crate::tensor::Tensor3;

/// How multi-channel input images enter the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelMode {
    /// Every channel contributes its own SROP to one pooled sample.
    #[default]
    Pooled,
    /// RGB is reduced to Rec.601 luminance first (replicated to three channels
    /// when a network needs RGB input).
    Luminance,
}

/// Per-channel input standardization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    /// Pixels as loaded, in `[0, 1]`.
    #[default]
    Raw,
    /// `(x - mean) / std` with the ImageNet channel statistics.
    Imagenet,
}

const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
const IMAGENET_STD: [f32; 3] = [0.229, 0.224, 0.225];

impl Preprocess {
    pub fn apply(self, t: &mut Tensor3) {
        if self == Preprocess::Raw {
            return;
        }
        for c in 0..t.channels {
            let (m, s) = if t.channels == 3 {
                (IMAGENET_MEAN[c], IMAGENET_STD[c])
            } else {
                (0.449, 0.226)
            };
            t.channel_mut(c).iter_mut().for_each(|v| *v = (*v - m) / s);
        }
    }
}

/// What the normalized SROP of a map is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SropReference {
    /// The map's own band: `bin / m` for an `n x n` map with `m + 1` radial bins.
    Band,
    /// The network input's band: the own-band value scaled by `n / n_input`,
    /// so a map at half resolution can reach at most 0.5.
    #[default]
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub spectral: SpectralConfig,
    pub channels: ChannelMode,
    pub preprocess: Preprocess,
    pub reference: SropReference,
}

impl ProfileOptions {
    fn rescale(&self, value: f64, size: usize, input_size: usize) -> f64 {
        match self.reference {
            SropReference::Band => value,
            SropReference::Input => value * size as f64 / input_size as f64,
        }
    }

    /// Applies the channel mode and standardization to a raw image.
    pub fn prepare(&self, image: &Tensor3, rgb_out: bool) -> Result<Tensor3> {
        let mut t = match (self.channels, image.channels) {
            (ChannelMode::Luminance, 3) if rgb_out => image.luminance()?.to_rgb()?,
            (ChannelMode::Luminance, 3) => image.luminance()?,
            (_, 1) if rgb_out => image.to_rgb()?,
            _ => image.clone(),
        };
        self.preprocess.apply(&mut t);
        Ok(t)
    }
}

/// Normalized per-channel SROPs of one map, `None` for channels without energy.
pub fn map_srops(
    t: &Tensor3,
    name: &str,
    input_size: usize,
    opts: &ProfileOptions,
) -> Result<Vec<Option<f64>>> {
    let fm = t.to_feature_map(name, MapSource::Randomized)?;
    Ok(srop_feature_map(&fm, &opts.spectral)?
        .into_iter()
        .map(|v| v.map(|v| opts.rescale(v.normalized, t.size, input_size)))
        .collect())
}

fn aggregate(
    names: &[String],
    sizes: &[usize],
    per_input: Vec<Vec<Vec<Option<f64>>>>,
) -> Result<Vec<SropReport>> {
    names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let pooled: Vec<Option<f64>> = per_input
                .iter()
                .flat_map(|taps| taps[k].iter().copied())
                .collect();
            layer_stats(&pooled, name, sizes[k])
        })
        .collect()
}

fn check_nonempty(inputs: &[Tensor3]) -> Result<()> {
    if inputs.is_empty() {
        Err(Error::InvalidInput("no input images".into()))
    } else {
        Ok(())
    }
}

/// One report per tap, pooling the per-channel SROPs of every input.
///
/// Inputs run in parallel; the result is independent of the thread count.
pub fn run_profile(
    spec: &ArchitectureSpec,
    inputs: &[Tensor3],
    seed: u64,
    opts: &ProfileOptions,
) -> Result<Vec<SropReport>> {
    opts.spectral.validate()?;
    check_nonempty(inputs)?;
    let net = Network::new(spec.clone(), seed);
    profile_network(&net, inputs, opts)
}

pub fn profile_network(net: &Network, inputs: &[Tensor3], opts: &ProfileOptions) -> Result<Vec<SropReport>> {
    check_nonempty(inputs)?;
    let names = net.tap_order();
    let input_size = net.spec().input.size;
    let rgb = net.spec().input.channels == 3;
    let per_input = inputs
        .par_iter()
        .map(|img| {
            let x = opts.prepare(img, rgb)?;
            let mut taps = Vec::with_capacity(names.len());
            net.forward_each(&x, |k, t| {
                taps.push(map_srops(t, &names[k], input_size, opts)?);
                Ok(())
            })?;
            Ok(taps)
        })
        .collect::<Result<Vec<_>>>()?;
    let sizes: Vec<usize> = names
        .iter()
        .map(|n| net.spec().shape_of(n).expect("tap exists").size)
        .collect();
    aggregate(&names, &sizes, per_input)
}

/// Level names of the benchmark ladder.
pub const BENCHMARK_LEVELS: [&str; 6] = ["input", "pool1", "pool2", "pool3", "pool4", "pool5"];

/// Reports for the input and five successive 2x2 stride-2 max-pools.
///
/// All inputs must share one size `n` with `n / 32 >= 3`; at 224 the ladder is
/// 224, 112, 56, 28, 14, 7.
pub fn benchmark_downscale(inputs: &[Tensor3], opts: &ProfileOptions) -> Result<Vec<SropReport>> {
    opts.spectral.validate()?;
    check_nonempty(inputs)?;
    let n = inputs[0].size;
    if let Some(bad) = inputs.iter().find(|t| t.size != n) {
        return Err(Error::InvalidInput(format!(
            "benchmark inputs must share one size, found {n} and {}",
            bad.size
        )));
    }
    if n >> 5 < 3 {
        return Err(Error::TooSmall(n));
    }
    let names: Vec<String> = BENCHMARK_LEVELS.iter().map(|s| s.to_string()).collect();
    let sizes: Vec<usize> = (0..6).map(|l| n >> l).collect();
    let per_input = inputs
        .par_iter()
        .map(|img| {
            let mut x = opts.prepare(img, false)?;
            let mut levels = Vec::with_capacity(6);
            for (l, name) in names.iter().enumerate() {
                if l > 0 {
                    x = layers::maxpool(&x, 2, 2, 0)?;
                }
                levels.push(map_srops(&x, name, n, opts)?);
            }
            Ok(levels)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate(&names, &sizes, per_input)
}

/// Reports for every layer of a manifest, reading `(N, C, n, n)` activation dumps.
///
/// With [`SropReference::Input`] the manifest must state the input resolution.
pub fn profile_manifest(
    manifest: &RunManifest,
    base_dir: &Path,
    opts: &ProfileOptions,
) -> Result<Vec<SropReport>> {
    opts.spectral.validate()?;
    let input_size = match (opts.reference, manifest.input.resolution) {
        (SropReference::Input, Some(r)) => r,
        (SropReference::Input, None) => {
            return Err(Error::Manifest(
                "input.resolution is required for input-referenced SROPs".into(),
            ))
        }
        (SropReference::Band, r) => r.unwrap_or(1),
    };
    manifest
        .layers
        .iter()
        .map(|entry| {
            let t = read_npy_file(base_dir.join(&entry.file))?;
            let (count, channels, size) = match *t.shape() {
                [n, c, h, w] if h == w => (n, c, h),
                [c, h, w] if h == w => (1, c, h),
                ref s => {
                    return Err(Error::InvalidInput(format!(
                        "layer `{}` has shape {s:?}, expected (N, C, n, n)",
                        entry.name
                    )))
                }
            };
            let data = t.to_f32();
            let per = channels * size * size;
            let srops = data
                .par_chunks_exact(per)
                .take(count)
                .map(|chunk| {
                    let map = Tensor3::new(channels, size, chunk.to_vec())?;
                    map_srops(&map, &entry.name, input_size, opts)
                })
                .collect::<Result<Vec<_>>>()?;
            let pooled: Vec<Option<f64>> = srops.into_iter().flatten().collect();
            layer_stats(&pooled, &entry.name, size)
        })
        .collect()
}

/// Writes each tap's activations for all inputs as `(N, C, n, n)` f32 NPY
/// plus a manifest. Memory grows with `N` times the largest tap.
pub fn export_activations(
    net: &Network,
    inputs: &[Tensor3],
    opts: &ProfileOptions,
    description: &str,
    dir: &Path,
) -> Result<RunManifest> {
    check_nonempty(inputs)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let names = net.tap_order();
    let rgb = net.spec().input.channels == 3;
    let mut stacks: Vec<Vec<f32>> = vec![Vec::new(); names.len()];
    for img in inputs {
        let x = opts.prepare(img, rgb)?;
        net.forward_each(&x, |k, t| {
            stacks[k].extend_from_slice(&t.data);
            Ok(())
        })?;
    }
    let mut layers = Vec::with_capacity(names.len());
    for (name, data) in names.iter().zip(stacks) {
        let shape = net.spec().shape_of(name).expect("tap exists");
        let dims = vec![inputs.len(), shape.channels, shape.size, shape.size];
        let file = format!("{name}.npy");
        write_npy_file(
            dir.join(&file),
            &NpyTensor::new(dims.clone(), NpyData::F32(data))?,
        )?;
        layers.push(LayerEntry {
            name: name.clone(),
            file: file.into(),
            shape: dims,
        });
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        model_name: net.spec().name.clone(),
        weights_origin: WeightsOrigin::Randomized,
        seed: Some(net.seed()),
        input: InputDescription {
            description: description.to_string(),
            resolution: Some(net.spec().input.size),
            count: Some(inputs.len()),
        },
        layers,
    };
    write_manifest(dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
