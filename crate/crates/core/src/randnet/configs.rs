//! Generators for the shipped backbone configs.
//!
//! Layer names follow the usual backbone notation: the tensor named `conv0`,
//! `pool1`, `resblk2.0`, `denseblk1`, `transblk3`, ... is the output of that block.
//! Layers inside a block carry a dotted suffix (`resblk2.0.conv1`). Anti-aliased
//! variants keep the block names and swap the downscaling internals.

use super::arch::{ArchitectureSpec, InputShape, LayerOp, LayerParams, LayerSpec};
use crate::error::{Error, Result};

/// Names of every shipped config.
pub const SHIPPED: [&str; 14] = [
    "alexnet",
    "alexnet_aa",
    "vgg16",
    "vgg16_aa",
    "vgg16_bn",
    "vgg16_bn_aa",
    "resnet18",
    "resnet18_aa",
    "resnet34",
    "resnet34_aa",
    "densenet121",
    "densenet121_aa",
    "densenet169",
    "densenet169_aa",
];

const IMAGENET: InputShape = InputShape {
    channels: 3,
    size: 224,
};

#[derive(Default)]
struct Builder {
    layers: Vec<LayerSpec>,
    taps: Vec<String>,
}

impl Builder {
    fn push(&mut self, name: String, op: LayerOp, params: LayerParams) -> String {
        self.layers.push(LayerSpec {
            name: name.clone(),
            op,
            params,
        });
        name
    }

    fn last(&self) -> String {
        self.layers
            .last()
            .map(|l| l.name.clone())
            .unwrap_or_else(|| super::arch::INPUT.into())
    }

    fn tap(&mut self) {
        let n = self.last();
        self.taps.push(n);
    }

    fn conv(
        &mut self,
        name: String,
        k: usize,
        s: usize,
        p: usize,
        c_out: usize,
        input: Option<String>,
    ) -> String {
        self.push(
            name,
            LayerOp::Conv,
            LayerParams {
                kernel: Some(k),
                stride: Some(s),
                padding: Some(p),
                channels_out: Some(c_out),
                input,
                ..Default::default()
            },
        )
    }

    fn simple(&mut self, name: String, op: LayerOp) -> String {
        self.push(name, op, LayerParams::default())
    }

    fn maxpool(&mut self, name: String, k: usize, p: usize) -> String {
        self.push(
            name,
            LayerOp::Maxpool,
            LayerParams {
                kernel: Some(k),
                stride: Some(2),
                padding: (p > 0).then_some(p),
                ..Default::default()
            },
        )
    }

    fn blurpool(&mut self, name: String, pool_kernel: Option<usize>, input: Option<String>) -> String {
        self.push(
            name,
            LayerOp::Blurpool,
            LayerParams {
                pool_kernel,
                input,
                ..Default::default()
            },
        )
    }

    fn combine(&mut self, name: String, op: LayerOp, inputs: Vec<String>) -> String {
        self.push(
            name,
            op,
            LayerParams {
                inputs: Some(inputs),
                ..Default::default()
            },
        )
    }

    fn finish(self, name: &str) -> Result<ArchitectureSpec> {
        ArchitectureSpec::new(name, IMAGENET, self.layers, Some(self.taps))
    }
}

fn alexnet(aa: bool) -> Builder {
    let mut b = Builder::default();
    if aa {
        b.conv("conv0.conv".into(), 11, 2, 2, 64, None);
        b.simple("conv0.relu".into(), LayerOp::Relu);
        b.blurpool("conv0".into(), None, None);
    } else {
        b.conv("conv0.conv".into(), 11, 4, 2, 64, None);
        b.simple("conv0".into(), LayerOp::Relu);
    }
    b.tap();
    let pool = |b: &mut Builder, name: &str| {
        if aa {
            b.blurpool(name.into(), Some(3), None);
        } else {
            b.maxpool(name.into(), 3, 0);
        }
        b.tap();
    };
    pool(&mut b, "pool1");
    b.conv("conv1.0.conv".into(), 5, 1, 2, 192, None);
    b.simple("conv1.0".into(), LayerOp::Relu);
    b.tap();
    pool(&mut b, "pool2");
    for (i, c) in [384, 256, 256].into_iter().enumerate() {
        b.conv(format!("conv2.{i}.conv"), 3, 1, 1, c, None);
        b.simple(format!("conv2.{i}"), LayerOp::Relu);
        b.tap();
    }
    pool(&mut b, "pool3");
    b
}

fn vgg16(bn: bool, aa: bool) -> Builder {
    let mut b = Builder::default();
    let blocks = [(2, 64), (2, 128), (3, 256), (3, 512), (3, 512)];
    for (blk, (reps, c)) in blocks.into_iter().enumerate() {
        for i in 0..reps {
            b.conv(format!("conv{blk}.{i}.conv"), 3, 1, 1, c, None);
            if bn {
                b.simple(format!("conv{blk}.{i}.bn"), LayerOp::Batchnorm);
            }
            b.simple(format!("conv{blk}.{i}"), LayerOp::Relu);
            b.tap();
        }
        let name = format!("pool{}", blk + 1);
        if aa {
            b.blurpool(name, Some(2), None);
        } else {
            b.maxpool(name, 2, 0);
        }
        b.tap();
    }
    b
}

fn stem(b: &mut Builder, aa: bool) {
    b.conv("conv0.conv".into(), 7, 2, 3, 64, None);
    b.simple("conv0.bn".into(), LayerOp::Batchnorm);
    b.simple("conv0".into(), LayerOp::Relu);
    b.tap();
    if aa {
        b.blurpool("pool1".into(), Some(2), None);
    } else {
        b.maxpool("pool1".into(), 3, 1);
    }
    b.tap();
}

fn resnet(depths: [usize; 4], aa: bool) -> Builder {
    let mut b = Builder::default();
    stem(&mut b, aa);
    let mut prev = b.last();
    let mut c_in = 64;
    for (l, &reps) in depths.iter().enumerate() {
        let c = 64 << l;
        for i in 0..reps {
            let stride = if l > 0 && i == 0 { 2 } else { 1 };
            let p = format!("resblk{}.{i}", l + 1);
            if aa && stride == 2 {
                b.conv(format!("{p}.conv1"), 3, 1, 1, c, Some(prev.clone()));
                b.simple(format!("{p}.bn1"), LayerOp::Batchnorm);
                b.simple(format!("{p}.relu1"), LayerOp::Relu);
                b.blurpool(format!("{p}.blur"), None, None);
            } else {
                b.conv(format!("{p}.conv1"), 3, stride, 1, c, Some(prev.clone()));
                b.simple(format!("{p}.bn1"), LayerOp::Batchnorm);
                b.simple(format!("{p}.relu1"), LayerOp::Relu);
            }
            b.conv(format!("{p}.conv2"), 3, 1, 1, c, None);
            let main = b.simple(format!("{p}.bn2"), LayerOp::Batchnorm);
            let skip = if stride != 1 || c_in != c {
                if aa {
                    b.blurpool(format!("{p}.down.blur"), None, Some(prev.clone()));
                    b.conv(format!("{p}.down.conv"), 1, 1, 0, c, None);
                } else {
                    b.conv(format!("{p}.down.conv"), 1, stride, 0, c, Some(prev.clone()));
                }
                b.simple(format!("{p}.down.bn"), LayerOp::Batchnorm)
            } else {
                prev.clone()
            };
            b.combine(format!("{p}.add"), LayerOp::Add, vec![main, skip]);
            prev = b.simple(p, LayerOp::Relu);
            b.tap();
            c_in = c;
        }
    }
    b
}

fn densenet(blocks: [usize; 4], aa: bool) -> Builder {
    const GROWTH: usize = 32;
    let mut b = Builder::default();
    stem(&mut b, aa);
    let mut features = b.last();
    let mut c = 64;
    for (blk, &reps) in blocks.iter().enumerate() {
        let blk = blk + 1;
        for j in 0..reps {
            let p = format!("denseblk{blk}.layer{}", j + 1);
            b.push(
                format!("{p}.norm1"),
                LayerOp::Batchnorm,
                LayerParams {
                    input: Some(features.clone()),
                    ..Default::default()
                },
            );
            b.simple(format!("{p}.relu1"), LayerOp::Relu);
            b.conv(format!("{p}.conv1"), 1, 1, 0, 4 * GROWTH, None);
            b.simple(format!("{p}.norm2"), LayerOp::Batchnorm);
            b.simple(format!("{p}.relu2"), LayerOp::Relu);
            let new = b.conv(format!("{p}.conv2"), 3, 1, 1, GROWTH, None);
            let name = if j + 1 == reps {
                format!("denseblk{blk}")
            } else {
                p
            };
            features = b.combine(name, LayerOp::Concat, vec![features, new]);
            c += GROWTH;
        }
        b.tap();
        if blk < 4 {
            let p = format!("transblk{blk}");
            b.simple(format!("{p}.norm"), LayerOp::Batchnorm);
            b.simple(format!("{p}.relu"), LayerOp::Relu);
            c /= 2;
            b.conv(format!("{p}.conv"), 1, 1, 0, c, None);
            features = if aa {
                b.blurpool(p, None, None)
            } else {
                b.push(
                    p,
                    LayerOp::Avgpool,
                    LayerParams {
                        kernel: Some(2),
                        stride: Some(2),
                        ..Default::default()
                    },
                )
            };
            b.tap();
        }
    }
    b.simple("bn1".into(), LayerOp::Batchnorm);
    b.tap();
    b
}

/// Builds one of the [`SHIPPED`] configs by name.
pub fn generate(name: &str) -> Result<ArchitectureSpec> {
    let (base, aa) = match name.strip_suffix("_aa") {
        Some(base) => (base, true),
        None => (name, false),
    };
    let builder = match base {
        "alexnet" => alexnet(aa),
        "vgg16" => vgg16(false, aa),
        "vgg16_bn" => vgg16(true, aa),
        "resnet18" => resnet([2, 2, 2, 2], aa),
        "resnet34" => resnet([3, 4, 6, 3], aa),
        "densenet121" => densenet([6, 12, 24, 16], aa),
        "densenet169" => densenet([6, 12, 32, 32], aa),
        _ => {
            return Err(Error::Architecture(format!(
                "unknown architecture `{name}`; known: {}",
                SHIPPED.join(", ")
            )))
        }
    };
    builder.finish(name)
}
