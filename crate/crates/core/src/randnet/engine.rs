//! Seeded random weights and the forward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arch::{ArchitectureSpec, LayerOp, LayerSpec, Source};
use super::layers;
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// He-uniform conv kernels, `U(-b, b)` with `b = sqrt(6 / fan_in)`.
///
/// Each layer draws from its own stream seeded by `seed ^ fnv1a(name)`, so a
/// layer's weights do not depend on the rest of the architecture.
pub fn he_uniform(seed: u64, layer_name: &str, c_out: usize, fan_in: usize) -> Vec<f32> {
    let bound = (6.0 / fan_in as f64).sqrt() as f32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(layer_name));
    (0..c_out * fan_in)
        .map(|_| rng.random_range(-bound..bound))
        .collect()
}

/// Runs one layer on its operand tensors.
///
/// `weights` is required for `conv` and ignored otherwise. Batch norm at
/// initialization (unit scale, zero shift, zero running mean, unit running
/// variance) is the identity.
pub fn apply_layer(inputs: &[&Tensor3], layer: &LayerSpec, weights: Option<&[f32]>) -> Result<Tensor3> {
    let p = &layer.params;
    let x = *inputs
        .first()
        .ok_or_else(|| Error::InvalidInput(format!("`{}` received no input", layer.name)))?;
    let missing = |what: &str| Error::Architecture(format!("`{}` lacks `{what}`", layer.name));
    match layer.op {
        LayerOp::Conv => {
            let w = weights.ok_or_else(|| missing("weights"))?;
            layers::conv2d(
                x,
                w,
                p.channels_out.ok_or_else(|| missing("channels_out"))?,
                p.kernel.ok_or_else(|| missing("kernel"))?,
                p.stride.unwrap_or(1),
                p.padding.unwrap_or(0),
            )
        }
        LayerOp::Maxpool | LayerOp::Avgpool => {
            let k = p.kernel.ok_or_else(|| missing("kernel"))?;
            let (s, pad) = (p.stride.unwrap_or(k), p.padding.unwrap_or(0));
            if layer.op == LayerOp::Maxpool {
                layers::maxpool(x, k, s, pad)
            } else {
                layers::avgpool(x, k, s, pad)
            }
        }
        LayerOp::Blurpool => layers::blurpool(x, p.pool_kernel, p.padding.unwrap_or(0)),
        LayerOp::Batchnorm => Ok(x.clone()),
        LayerOp::Relu => {
            let mut y = x.clone();
            layers::relu_inplace(&mut y);
            Ok(y)
        }
        LayerOp::Add => layers::add(inputs),
        LayerOp::Concat => layers::concat(inputs),
        LayerOp::AvgpoolGlobal => Ok(layers::global_avgpool(x)),
    }
}

/// An architecture with its random weights fixed.
#[derive(Debug, Clone)]
pub struct Network {
    spec: ArchitectureSpec,
    seed: u64,
    weights: Vec<Option<Vec<f32>>>,
    /// Index of the last layer reading each layer's output.
    last_use: Vec<usize>,
    is_tap: Vec<bool>,
}

impl Network {
    pub fn new(spec: ArchitectureSpec, seed: u64) -> Self {
        let n = spec.layers.len();
        let mut weights = Vec::with_capacity(n);
        let mut last_use: Vec<usize> = (0..n).collect();
        for (i, layer) in spec.layers.iter().enumerate() {
            let c_in = |s: &Source| match s {
                Source::Input => spec.input.channels,
                Source::Layer(j) => spec.shapes()[*j].channels,
            };
            let srcs = spec.sources(i);
            weights.push(match layer.op {
                LayerOp::Conv => {
                    let k = layer.params.kernel.unwrap_or(1);
                    let c_out = spec.shapes()[i].channels;
                    Some(he_uniform(seed, &layer.name, c_out, c_in(&srcs[0]) * k * k))
                }
                _ => None,
            });
            for s in srcs {
                if let Source::Layer(j) = s {
                    last_use[*j] = i;
                }
            }
        }
        let is_tap = spec.layers.iter().map(|l| spec.taps.contains(&l.name)).collect();
        Self {
            spec,
            seed,
            weights,
            last_use,
            is_tap,
        }
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layer_weights(&self, name: &str) -> Option<&[f32]> {
        self.weights[self.spec.index_of(name)?].as_deref()
    }

    /// Forward pass calling `visit(tap_index, activation)` for each tap in layer order.
    ///
    /// Intermediate outputs are released after their last consumer runs.
    pub fn forward_each(
        &self,
        input: &Tensor3,
        mut visit: impl FnMut(usize, &Tensor3) -> Result<()>,
    ) -> Result<()> {
        let want = self.spec.input;
        if input.channels != want.channels || input.size != want.size {
            return Err(Error::InvalidInput(format!(
                "{} expects {}x{}x{} input, got {}x{}x{}",
                self.spec.name, want.channels, want.size, want.size, input.channels, input.size, input.size
            )));
        }
        let mut outputs: Vec<Option<Tensor3>> = vec![None; self.spec.layers.len()];
        let mut tap_index = 0;
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let srcs = self.spec.sources(i);
            let y = match (layer.op, srcs) {
                // element-wise ops reuse a buffer nobody else needs
                (LayerOp::Relu | LayerOp::Batchnorm, [Source::Layer(j)]) if self.last_use[*j] == i => {
                    let mut y = outputs[*j].take().expect("operand alive");
                    if layer.op == LayerOp::Relu {
                        layers::relu_inplace(&mut y);
                    }
                    y
                }
                _ => {
                    let operands: Vec<&Tensor3> = srcs
                        .iter()
                        .map(|s| match s {
                            Source::Input => input,
                            Source::Layer(j) => outputs[*j].as_ref().expect("operand alive"),
                        })
                        .collect();
                    apply_layer(&operands, layer, self.weights[i].as_deref())?
                }
            };
            if self.is_tap[i] {
                visit(tap_index, &y)?;
                tap_index += 1;
            }
            for s in srcs {
                if let Source::Layer(j) = s {
                    if self.last_use[*j] == i {
                        outputs[*j] = None;
                    }
                }
            }
            if self.last_use[i] != i {
                outputs[i] = Some(y);
            }
        }
        Ok(())
    }

    /// Activations of every tap, in tap order of appearance.
    pub fn forward_taps(&self, input: &Tensor3) -> Result<Vec<(String, Tensor3)>> {
        let names = self.tap_order();
        let mut out = Vec::with_capacity(names.len());
        self.forward_each(input, |i, t| {
            out.push((names[i].clone(), t.clone()));
            Ok(())
        })?;
        Ok(out)
    }

    /// Tap names in the order `forward_each` visits them.
    pub fn tap_order(&self) -> Vec<String> {
        self.spec
            .layers
            .iter()
            .zip(&self.is_tap)
            .filter(|(_, t)| **t)
            .map(|(l, _)| l.name.clone())
            .collect()
    }
}
