//! Forward-only CNN engine with seeded random weights.
//!
//! Architectures are JSON configs (see [`build_from_config`]); the shipped
//! backbones live in `configs/` and are embedded in the crate.

mod arch;
mod configs;
mod engine;
pub mod layers;
mod profile;

pub use arch::{
    build_from_config, ArchitectureSpec, InputShape, LayerOp, LayerParams, LayerSpec, Shape, INPUT,
};
pub use configs::{generate, SHIPPED};
pub use engine::{apply_layer, he_uniform, Network};
pub use profile::{
    benchmark_downscale, export_activations, map_srops, profile_manifest, profile_network, run_profile,
    ChannelMode, Preprocess, ProfileOptions, SropReference, BENCHMARK_LEVELS,
};

use crate::error::{Error, Result};

macro_rules! shipped_text {
    ($($name:literal),* $(,)?) => {
        /// JSON text of a shipped config.
        pub fn shipped_config(name: &str) -> Result<&'static str> {
            match name {
                $($name => Ok(include_str!(concat!("../../configs/", $name, ".json"))),)*
                _ => Err(Error::Architecture(format!(
                    "unknown architecture `{name}`; known: {}",
                    SHIPPED.join(", ")
                ))),
            }
        }
    };
}

shipped_text!(
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
);

/// Parses a shipped config by name.
pub fn shipped(name: &str) -> Result<ArchitectureSpec> {
    build_from_config(shipped_config(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sizes(spec: &ArchitectureSpec) -> Vec<(String, usize)> {
        spec.tap_resolutions()
    }

    fn expect(spec: &str, want: &[(&str, usize)]) {
        let got = sizes(&shipped(spec).unwrap());
        let want: Vec<(String, usize)> = want.iter().map(|(n, s)| (n.to_string(), *s)).collect();
        assert_eq!(got, want, "{spec}");
    }

    #[test]
    fn shipped_files_match_generators() {
        let regen = std::env::var_os("SROPKIT_REGEN_CONFIGS").is_some();
        for name in SHIPPED {
            let text = generate(name).unwrap().to_json();
            if regen {
                let path = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/");
                std::fs::write(format!("{path}{name}.json"), &text).unwrap();
            } else {
                assert_eq!(
                    shipped_config(name).unwrap(),
                    text,
                    "configs/{name}.json is stale"
                );
            }
        }
    }

    #[test]
    fn alexnet_ladder() {
        let want = [
            ("conv0", 55),
            ("pool1", 27),
            ("conv1.0", 27),
            ("pool2", 13),
            ("conv2.0", 13),
            ("conv2.1", 13),
            ("conv2.2", 13),
            ("pool3", 6),
        ];
        expect("alexnet", &want);
        expect("alexnet_aa", &want);
    }

    #[test]
    fn vgg_ladder() {
        let mut want = vec![];
        let names = [
            (vec!["conv0.0", "conv0.1"], 224),
            (vec!["pool1", "conv1.0", "conv1.1"], 112),
            (vec!["pool2", "conv2.0", "conv2.1", "conv2.2"], 56),
            (vec!["pool3", "conv3.0", "conv3.1", "conv3.2"], 28),
            (vec!["pool4", "conv4.0", "conv4.1", "conv4.2"], 14),
            (vec!["pool5"], 7),
        ];
        for (group, size) in &names {
            for n in group {
                want.push((*n, *size));
            }
        }
        for v in ["vgg16", "vgg16_bn", "vgg16_aa", "vgg16_bn_aa"] {
            expect(v, &want);
        }
    }

    #[test]
    fn resnet_ladders() {
        let r18 = [
            ("conv0", 112),
            ("pool1", 56),
            ("resblk1.0", 56),
            ("resblk1.1", 56),
            ("resblk2.0", 28),
            ("resblk2.1", 28),
            ("resblk3.0", 14),
            ("resblk3.1", 14),
            ("resblk4.0", 7),
            ("resblk4.1", 7),
        ];
        expect("resnet18", &r18);
        expect("resnet18_aa", &r18);
        let r34 = sizes(&shipped("resnet34").unwrap());
        assert_eq!(r34.len(), 2 + 3 + 4 + 6 + 3);
        assert_eq!(r34[4], ("resblk1.2".to_string(), 56));
        assert_eq!(r34[9], ("resblk3.0".to_string(), 14));
        assert_eq!(r34.last().unwrap(), &("resblk4.2".to_string(), 7));
        assert_eq!(sizes(&shipped("resnet34_aa").unwrap()), r34);
    }

    #[test]
    fn densenet_ladders() {
        let want = [
            ("conv0", 112),
            ("pool1", 56),
            ("denseblk1", 56),
            ("transblk1", 28),
            ("denseblk2", 28),
            ("transblk2", 14),
            ("denseblk3", 14),
            ("transblk3", 7),
            ("denseblk4", 7),
            ("bn1", 7),
        ];
        for v in ["densenet121", "densenet121_aa", "densenet169", "densenet169_aa"] {
            expect(v, &want);
        }
        let d121 = shipped("densenet121").unwrap();
        assert_eq!(d121.shape_of("denseblk1").unwrap().channels, 256);
        assert_eq!(d121.shape_of("bn1").unwrap().channels, 1024);
        assert_eq!(
            shipped("densenet169").unwrap().shape_of("bn1").unwrap().channels,
            1664
        );
    }

    #[test]
    fn vgg_bn_differs_only_by_batchnorm() {
        let plain = shipped("vgg16").unwrap();
        let bn = shipped("vgg16_bn").unwrap();
        let stripped: Vec<LayerSpec> = bn
            .layers
            .iter()
            .filter(|l| l.op != LayerOp::Batchnorm)
            .cloned()
            .collect();
        assert_eq!(stripped, plain.layers);
        assert_eq!(bn.taps, plain.taps);
        assert_eq!(bn.layers.len() - plain.layers.len(), 13);
    }

    #[test]
    fn unknown_names_fail() {
        assert!(shipped("lenet").is_err());
        assert!(generate("lenet_aa").is_err());
    }

    fn small_spec() -> ArchitectureSpec {
        build_from_config(
            r#"{"name":"toy","input":{"channels":3,"size":32},"layers":[
                {"name":"c0","op":"conv","params":{"kernel":3,"padding":1,"channels_out":8}},
                {"name":"r0","op":"relu"},
                {"name":"p1","op":"maxpool","params":{"kernel":2,"stride":2}},
                {"name":"c1","op":"conv","params":{"kernel":3,"padding":1,"channels_out":8}},
                {"name":"s","op":"add","params":{"inputs":["p1","c1"]}},
                {"name":"b","op":"blurpool","params":{"pool_kernel":2}}
            ],"taps":["r0","p1","s","b"]}"#,
        )
        .unwrap()
    }

    fn noise(seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::new(3, 32, (0..3 * 32 * 32).map(|_| rng.random::<f32>()).collect()).unwrap()
    }

    #[test]
    fn forward_matches_layer_by_layer() {
        let spec = small_spec();
        let net = Network::new(spec.clone(), 5);
        let x = noise(1);
        let taps = net.forward_taps(&x).unwrap();
        let c0 = apply_layer(&[&x], &spec.layers[0], net.layer_weights("c0")).unwrap();
        let r0 = apply_layer(&[&c0], &spec.layers[1], None).unwrap();
        let p1 = apply_layer(&[&r0], &spec.layers[2], None).unwrap();
        let c1 = apply_layer(&[&p1], &spec.layers[3], net.layer_weights("c1")).unwrap();
        let s = apply_layer(&[&p1, &c1], &spec.layers[4], None).unwrap();
        let b = apply_layer(&[&s], &spec.layers[5], None).unwrap();
        let want = [("r0", r0), ("p1", p1), ("s", s), ("b", b)];
        assert_eq!(taps.len(), want.len());
        for ((gn, gt), (wn, wt)) in taps.iter().zip(&want) {
            assert_eq!(gn, wn);
            assert_eq!(gt, wt);
        }
    }

    #[test]
    fn weights_are_seeded_per_layer() {
        let a = he_uniform(1, "c0", 4, 27);
        assert_eq!(a, he_uniform(1, "c0", 4, 27));
        assert_ne!(a, he_uniform(2, "c0", 4, 27));
        assert_ne!(a, he_uniform(1, "c1", 4, 27));
        let bound = (6.0f32 / 27.0).sqrt();
        assert!(a.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn profile_is_deterministic_and_checks_input() {
        let spec = small_spec();
        let inputs: Vec<Tensor3> = (0..3).map(noise).collect();
        let opts = ProfileOptions::default();
        let a = run_profile(&spec, &inputs, 9, &opts).unwrap();
        let b = run_profile(&spec, &inputs, 9, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_eq!(a[0].kernel_srops.len(), 3 * 8);
        assert!(run_profile(&spec, &[Tensor3::zeros(3, 31)], 9, &opts).is_err());
        assert!(run_profile(&spec, &[], 9, &opts).is_err());
    }

    #[test]
    fn constant_input_before_first_conv() {
        // a bare pool ladder on a constant image: every tap is constant, so SROP 0
        let spec = build_from_config(
            r#"{"name":"pools","input":{"channels":3,"size":32},"layers":[
                {"name":"p1","op":"maxpool","params":{"kernel":2,"stride":2}},
                {"name":"p2","op":"blurpool","params":{"pool_kernel":2}}
            ]}"#,
        )
        .unwrap();
        let reports = run_profile(
            &spec,
            &[Tensor3::filled(3, 32, 0.3)],
            0,
            &ProfileOptions::default(),
        )
        .unwrap();
        for r in reports {
            assert_eq!(r.mean, 0.0);
            assert_eq!(r.skipped_channels, 0);
        }
    }

    #[test]
    fn benchmark_ladder_sizes() {
        let imgs = vec![noise(3).luminance().unwrap(); 1];
        assert!(benchmark_downscale(&imgs, &ProfileOptions::default()).is_err());
        let big = Tensor3::filled(3, 96, 0.5);
        let r = benchmark_downscale(&[big], &ProfileOptions::default()).unwrap();
        let res: Vec<usize> = r.iter().map(|r| r.resolution).collect();
        assert_eq!(res, vec![96, 48, 24, 12, 6, 3]);
        assert!(r.iter().all(|r| r.mean == 0.0 && r.kernel_srops.len() == 3));
    }
}
