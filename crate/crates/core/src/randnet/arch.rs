//! Architecture descriptions: an ordered layer graph with named taps.
//!
//! Each layer reads the previous layer's output unless `params.input` names an
//! earlier layer (or `"input"` for the network input). `add` and `concat` take
//! their operands from `params.inputs`.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name that refers to the network input.
pub const INPUT: &str = "input";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerOp {
    Conv,
    Maxpool,
    Avgpool,
    Blurpool,
    Batchnorm,
    Relu,
    Add,
    Concat,
    AvgpoolGlobal,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels_out: Option<usize>,
    /// Window of the stride-1 max-pool that precedes a blur-pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_kernel: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub op: LayerOp,
    #[serde(default)]
    pub params: LayerParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputShape {
    pub channels: usize,
    pub size: usize,
}

/// `channels x size x size`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub channels: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ConfigFile {
    name: String,
    input: InputShape,
    #[serde(default)]
    taps: Option<Vec<String>>,
    layers: Vec<LayerSpec>,
}

/// A validated architecture with resolved layer sources and output shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureSpec {
    pub name: String,
    pub input: InputShape,
    pub layers: Vec<LayerSpec>,
    pub taps: Vec<String>,
    shapes: Vec<Shape>,
    sources: Vec<Vec<Source>>,
}

/// Where a layer reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Source {
    Input,
    Layer(usize),
}

impl ArchitectureSpec {
    pub fn new(
        name: impl Into<String>,
        input: InputShape,
        layers: Vec<LayerSpec>,
        taps: Option<Vec<String>>,
    ) -> Result<Self> {
        let taps = taps.unwrap_or_else(|| layers.iter().map(|l| l.name.clone()).collect());
        let mut spec = ArchitectureSpec {
            name: name.into(),
            input,
            layers,
            taps,
            shapes: Vec::new(),
            sources: Vec::new(),
        };
        spec.resolve()?;
        Ok(spec)
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub(crate) fn sources(&self, layer: usize) -> &[Source] {
        &self.sources[layer]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    pub fn shape_of(&self, name: &str) -> Option<Shape> {
        self.index_of(name).map(|i| self.shapes[i])
    }

    /// `(tap name, spatial size)` in tap order.
    pub fn tap_resolutions(&self) -> Vec<(String, usize)> {
        self.taps
            .iter()
            .map(|t| (t.clone(), self.shape_of(t).expect("validated tap").size))
            .collect()
    }

    pub fn to_json(&self) -> String {
        let cfg = ConfigFile {
            name: self.name.clone(),
            input: self.input,
            taps: Some(self.taps.clone()),
            layers: self.layers.clone(),
        };
        // one layer per line keeps the shipped configs diffable
        let mut out = format!(
            "{{\n  \"name\": {},\n  \"input\": {},\n  \"taps\": {},\n  \"layers\": [\n",
            serde_json::to_string(&cfg.name).unwrap(),
            serde_json::to_string(&cfg.input).unwrap(),
            serde_json::to_string(&cfg.taps).unwrap(),
        );
        for (i, l) in cfg.layers.iter().enumerate() {
            out.push_str("    ");
            out.push_str(&serde_json::to_string(l).unwrap());
            out.push_str(if i + 1 < cfg.layers.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]\n}\n");
        out
    }

    fn resolve(&mut self) -> Result<()> {
        let err = |msg: String| Err(Error::Architecture(format!("{}: {msg}", self.name)));
        if self.input.channels == 0 || self.input.size == 0 {
            return err("empty input shape".into());
        }
        if self.layers.is_empty() {
            return err("no layers".into());
        }
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut sources = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.name == INPUT {
                return err(format!("layer name `{INPUT}` is reserved"));
            }
            if index.contains_key(layer.name.as_str()) {
                return err(format!("duplicate layer `{}`", layer.name));
            }
            let lookup = |n: &str| -> Result<Source> {
                if n == INPUT {
                    Ok(Source::Input)
                } else {
                    index.get(n).map(|&j| Source::Layer(j)).ok_or_else(|| {
                        Error::Architecture(format!(
                            "{}: layer `{}` reads unknown layer `{n}`",
                            self.name, layer.name
                        ))
                    })
                }
            };
            let srcs: Vec<Source> = match layer.op {
                LayerOp::Add | LayerOp::Concat => {
                    let names = layer.params.inputs.as_deref().unwrap_or_default();
                    if names.len() < 2 {
                        return err(format!("`{}` needs at least two inputs", layer.name));
                    }
                    names.iter().map(|n| lookup(n)).collect::<Result<_>>()?
                }
                _ => vec![match &layer.params.input {
                    Some(n) => lookup(n)?,
                    None if i == 0 => Source::Input,
                    None => Source::Layer(i - 1),
                }],
            };
            let in_shapes: Vec<Shape> = srcs
                .iter()
                .map(|s| match s {
                    Source::Input => Shape {
                        channels: self.input.channels,
                        size: self.input.size,
                    },
                    Source::Layer(j) => shapes[*j],
                })
                .collect();
            let out = output_shape(layer, &in_shapes)
                .map_err(|m| Error::Architecture(format!("{}: `{}`: {m}", self.name, layer.name)))?;
            shapes.push(out);
            sources.push(srcs);
            index.insert(layer.name.as_str(), i);
        }
        let mut seen = HashSet::new();
        for t in &self.taps {
            let Some(&i) = index.get(t.as_str()) else {
                return err(format!("tap `{t}` is not a layer"));
            };
            if !seen.insert(t) {
                return err(format!("tap `{t}` listed twice"));
            }
            if shapes[i].size < 3 {
                return err(format!(
                    "tap `{t}` is {}x{}, too small for SROPs",
                    shapes[i].size, shapes[i].size
                ));
            }
        }
        self.shapes = shapes;
        self.sources = sources;
        Ok(())
    }
}

fn need(v: Option<usize>, what: &str) -> std::result::Result<usize, String> {
    v.ok_or_else(|| format!("missing `{what}`"))
}

fn window_out(n: usize, k: usize, s: usize, p: usize) -> std::result::Result<usize, String> {
    if n + 2 * p < k {
        return Err(format!("window {k} larger than padded input {}", n + 2 * p));
    }
    Ok((n + 2 * p - k) / s + 1)
}

/// Output size of the stride-2 `[1, 2, 1]` blur with one pixel of reflection padding.
pub(crate) fn blur_out(n: usize) -> usize {
    (n - 1) / 2 + 1
}

fn output_shape(layer: &LayerSpec, inputs: &[Shape]) -> std::result::Result<Shape, String> {
    let p = &layer.params;
    let x = inputs[0];
    match layer.op {
        LayerOp::Conv => {
            let k = need(p.kernel, "kernel")?;
            let s = p.stride.unwrap_or(1);
            if ![1, 3, 5, 7, 11].contains(&k) {
                return Err(format!("conv kernel {k} not in {{1, 3, 5, 7, 11}}"));
            }
            if ![1, 2, 4].contains(&s) {
                return Err(format!("conv stride {s} not in {{1, 2, 4}}"));
            }
            let c = need(p.channels_out, "channels_out")?;
            if c == 0 {
                return Err("zero output channels".into());
            }
            Ok(Shape {
                channels: c,
                size: window_out(x.size, k, s, p.padding.unwrap_or(0))?,
            })
        }
        LayerOp::Maxpool | LayerOp::Avgpool => {
            let k = need(p.kernel, "kernel")?;
            let s = p.stride.unwrap_or(k);
            if layer.op == LayerOp::Maxpool && (![2, 3].contains(&k) || s != 2) {
                return Err(format!(
                    "max-pool must have kernel 2 or 3 and stride 2, got {k}/{s}"
                ));
            }
            let pad = p.padding.unwrap_or(0);
            if 2 * pad > k {
                return Err("padding exceeds half the window".into());
            }
            Ok(Shape {
                channels: x.channels,
                size: window_out(x.size, k, s, pad)?,
            })
        }
        LayerOp::Blurpool => {
            let dense = match p.pool_kernel {
                Some(k) if [2, 3].contains(&k) => window_out(x.size, k, 1, p.padding.unwrap_or(0))?,
                Some(k) => return Err(format!("dense max-pool kernel {k} not in {{2, 3}}")),
                None => x.size,
            };
            if dense < 2 {
                return Err("blur needs at least 2x2 input".into());
            }
            Ok(Shape {
                channels: x.channels,
                size: blur_out(dense),
            })
        }
        LayerOp::Batchnorm | LayerOp::Relu => Ok(x),
        LayerOp::AvgpoolGlobal => Ok(Shape {
            channels: x.channels,
            size: 1,
        }),
        LayerOp::Add => {
            if inputs.iter().any(|s| *s != x) {
                return Err(format!("add operands differ in shape: {inputs:?}"));
            }
            Ok(x)
        }
        LayerOp::Concat => {
            if inputs.iter().any(|s| s.size != x.size) {
                return Err(format!("concat operands differ in size: {inputs:?}"));
            }
            Ok(Shape {
                channels: inputs.iter().map(|s| s.channels).sum(),
                size: x.size,
            })
        }
    }
}

/// Parses and validates a JSON architecture config.
pub fn build_from_config(text: &str) -> Result<ArchitectureSpec> {
    let cfg: ConfigFile =
        serde_json::from_str(text).map_err(|e| Error::Architecture(format!("config: {e}")))?;
    ArchitectureSpec::new(cfg.name, cfg.input, cfg.layers, cfg.taps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(name: &str, op: LayerOp, params: LayerParams) -> LayerSpec {
        LayerSpec {
            name: name.into(),
            op,
            params,
        }
    }

    fn conv(name: &str, k: usize, s: usize, p: usize, c: usize) -> LayerSpec {
        layer(
            name,
            LayerOp::Conv,
            LayerParams {
                kernel: Some(k),
                stride: Some(s),
                padding: Some(p),
                channels_out: Some(c),
                ..Default::default()
            },
        )
    }

    const RGB: InputShape = InputShape {
        channels: 3,
        size: 32,
    };

    #[test]
    fn shapes_chain() {
        let spec = ArchitectureSpec::new(
            "t",
            RGB,
            vec![
                conv("a", 3, 1, 1, 8),
                conv("b", 3, 2, 1, 8),
                layer(
                    "skip",
                    LayerOp::Conv,
                    LayerParams {
                        kernel: Some(1),
                        stride: Some(2),
                        channels_out: Some(8),
                        input: Some("a".into()),
                        ..Default::default()
                    },
                ),
                layer(
                    "sum",
                    LayerOp::Add,
                    LayerParams {
                        inputs: Some(vec!["b".into(), "skip".into()]),
                        ..Default::default()
                    },
                ),
                layer(
                    "cat",
                    LayerOp::Concat,
                    LayerParams {
                        inputs: Some(vec!["sum".into(), "b".into()]),
                        ..Default::default()
                    },
                ),
            ],
            None,
        )
        .unwrap();
        assert_eq!(
            spec.shape_of("b").unwrap(),
            Shape {
                channels: 8,
                size: 16
            }
        );
        assert_eq!(
            spec.shape_of("cat").unwrap(),
            Shape {
                channels: 16,
                size: 16
            }
        );
        let back = build_from_config(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn mismatched_skip_is_rejected() {
        let r = ArchitectureSpec::new(
            "t",
            RGB,
            vec![
                conv("a", 3, 1, 1, 8),
                conv("b", 3, 2, 1, 8),
                layer(
                    "sum",
                    LayerOp::Add,
                    LayerParams {
                        inputs: Some(vec!["a".into(), "b".into()]),
                        ..Default::default()
                    },
                ),
            ],
            None,
        );
        assert!(matches!(r, Err(Error::Architecture(_))));
    }

    #[test]
    fn validation_errors() {
        let bad = [
            r#"{"name":"x","input":{"channels":3,"size":8},"layers":[{"name":"a","op":"warp","params":{}}]}"#,
            r#"{"name":"x","input":{"channels":3,"size":8},"layers":[{"name":"a","op":"relu","params":{"input":"nope"}}]}"#,
            r#"{"name":"x","input":{"channels":3,"size":8},"layers":[{"name":"a","op":"conv","params":{"kernel":4,"channels_out":2}}]}"#,
            r#"{"name":"x","input":{"channels":3,"size":8},"layers":[{"name":"a","op":"maxpool","params":{"kernel":2,"stride":1}}]}"#,
            r#"{"name":"x","input":{"channels":3,"size":8},"taps":["b"],"layers":[{"name":"a","op":"relu"}]}"#,
            r#"{"name":"x","input":{"channels":3,"size":8},"layers":[{"name":"a","op":"relu"},{"name":"a","op":"relu"}]}"#,
            r#"{"name":"x","input":{"channels":3,"size":8},"layers":[{"name":"a","op":"avgpool_global"}]}"#,
        ];
        for text in bad {
            assert!(build_from_config(text).is_err(), "{text}");
        }
        let ok = r#"{"name":"x","input":{"channels":3,"size":8},"layers":[{"name":"a","op":"relu"},{"name":"g","op":"avgpool_global"}],"taps":["a"]}"#;
        assert_eq!(
            build_from_config(ok).unwrap().tap_resolutions(),
            vec![("a".to_string(), 8)]
        );
    }

    #[test]
    fn blurpool_sizes() {
        // dense k=2 max then stride-2 blur halves even sizes
        let spec = ArchitectureSpec::new(
            "t",
            InputShape {
                channels: 1,
                size: 224,
            },
            vec![layer(
                "p",
                LayerOp::Blurpool,
                LayerParams {
                    pool_kernel: Some(2),
                    ..Default::default()
                },
            )],
            None,
        )
        .unwrap();
        assert_eq!(spec.shape_of("p").unwrap().size, 112);
        assert_eq!(blur_out(55), 28);
        assert_eq!(blur_out(53), 27);
    }
}
