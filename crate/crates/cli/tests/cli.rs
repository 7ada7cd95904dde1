use std::path::Path;
use std::process::{Command, Output};

use sropkit::io::datasets::{write_cifar10_batch, write_mnist_idx};
use sropkit::io::{read_npy_file, write_npy_file, LabeledImages, NpyData, NpyTensor};
use sropkit::stats::ProfileTable;

fn sropkit(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sropkit"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SROPKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn texture(n: usize, seed: usize) -> Vec<f32> {
    (0..3 * n * n)
        .map(|i| {
            let (y, x) = ((i / n) % n, i % n);
            (((x * (3 + seed) + y * 7 + i / (n * n) * 11) % 17) as f32 / 17.0 + (y as f32 / n as f32)) / 2.0
        })
        .collect()
}

fn image_dir(dir: &Path, n: usize, count: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for k in 0..count {
        let t = NpyTensor::new(vec![3, n, n], NpyData::F32(texture(n, k))).unwrap();
        write_npy_file(dir.join(format!("img{k:03}.npy")), &t).unwrap();
    }
}

#[test]
fn sropimg_constant_image_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let t = NpyTensor::new(vec![16, 16], NpyData::U8(vec![77; 256])).unwrap();
    write_npy_file(tmp.path().join("flat.npy"), &t).unwrap();
    let o = sropkit(
        &["sropimg", "flat.npy", "--format", "csv", "--format", "json"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("normalized 0"));
    let csv = std::fs::read_to_string(tmp.path().join("sropimg.csv")).unwrap();
    assert_eq!(csv, "image,channel,bin,normalized\n0,0,0,0\n");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("sropimg.json")).unwrap()).unwrap();
    assert_eq!(json[0]["srop"]["normalized"], 0.0);
    assert!(tmp.path().join("run.json").is_file());
}

#[test]
fn baseline_ladder_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    image_dir(&tmp.path().join("imgs"), 96, 3);
    let o = sropkit(
        &[
            "baseline", "imgs", "--out", "a", "--format", "csv", "--format", "json", "--format", "svg",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("a/baseline.csv")).unwrap();
    let table = ProfileTable::from_csv(&csv).unwrap();
    let res: Vec<usize> = table.rows.iter().map(|r| r.resolution).collect();
    assert_eq!(res, vec![96, 48, 24, 12, 6, 3]);
    assert_eq!(table.to_csv(), csv);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("a/baseline.json")).unwrap()).unwrap();
    let from_json: ProfileTable = serde_json::from_value(json["table"].clone()).unwrap();
    assert_eq!(from_json, table);
    for f in ["baseline.svg", "baseline_box.svg", "run.json"] {
        assert!(tmp.path().join("a").join(f).is_file(), "{f}");
    }

    let o = sropkit(&["replay", "a/run.json", "--out", "b"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["baseline.csv", "baseline.json", "baseline.svg"] {
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(f)).unwrap(),
            std::fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("s.txt"), "1 2 3 4 5 6 7 8").unwrap();
    assert_eq!(code(&sropkit(&["frobnicate"], tmp.path())), 2);
    assert_eq!(code(&sropkit(&["srop1d"], tmp.path())), 2);
    assert_eq!(
        code(&sropkit(&["srop1d", "s.txt", "--kappa", "1.5"], tmp.path())),
        2
    );
    assert_eq!(code(&sropkit(&["srop1d", "s.txt", "--band", "3"], tmp.path())), 2);
    assert_eq!(code(&sropkit(&["srop1d", "missing.txt"], tmp.path())), 1);
    assert_eq!(code(&sropkit(&["srop1d", "s.txt"], tmp.path())), 0);
    assert_eq!(code(&sropkit(&["--help"], tmp.path())), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_sropkit"))
        .args(["srop1d", "s.txt"])
        .current_dir(tmp.path())
        .env("SROPKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    std::fs::write(tmp.path().join("flat.txt"), "0 0 0 0").unwrap();
    assert_eq!(code(&sropkit(&["srop1d", "flat.txt"], tmp.path())), 2);
}

#[test]
fn srop1d_text_series() {
    let tmp = tempfile::tempdir().unwrap();
    let signal: Vec<String> = (0..64)
        .map(|t| {
            (2.0 * std::f64::consts::PI * 5.0 * t as f64 / 64.0)
                .sin()
                .to_string()
        })
        .collect();
    std::fs::write(tmp.path().join("sine.txt"), signal.join("\n")).unwrap();
    let o = sropkit(&["srop1d", "sine.txt"], tmp.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(tmp.path().join("srop1d.csv")).unwrap();
    assert!(csv.ends_with("5,0.15625,0.85,0,32\n"), "{csv}");
}

#[test]
fn sroptensor_flags_dead_channels() {
    let tmp = tempfile::tempdir().unwrap();
    let mut data = texture(8, 1)[..128].to_vec();
    data.extend(std::iter::repeat_n(0.0, 64));
    let t = NpyTensor::new(vec![3, 8, 8], NpyData::F32(data)).unwrap();
    write_npy_file(tmp.path().join("fm.npy"), &t).unwrap();
    let o = sropkit(
        &["sroptensor", "fm.npy", "--format", "json", "--format", "csv"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("sroptensor.json")).unwrap()).unwrap();
    assert_eq!(report["skipped_channels"], 1);
    assert_eq!(report["kernel_srops"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(tmp.path().join("sroptensor.csv")).unwrap();
    assert!(csv.ends_with("0,2,,\n"));
}

#[test]
fn randnet_export_then_profile() {
    let tmp = tempfile::tempdir().unwrap();
    image_dir(&tmp.path().join("imgs"), 224, 1);
    let o = sropkit(
        &[
            "randnet", "resnet18", "imgs", "--seed", "3", "--export", "dump", "--out", "r",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let randnet = std::fs::read_to_string(tmp.path().join("r/randnet.csv")).unwrap();

    let o = sropkit(&["profile", "dump/manifest.json", "--out", "p"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let profile = std::fs::read_to_string(tmp.path().join("p/profile.csv")).unwrap();
    let table = ProfileTable::from_csv(&profile).unwrap();
    let names: Vec<&str> = table.rows.iter().map(|r| r.layer.as_str()).collect();
    assert_eq!(
        names,
        [
            "conv0",
            "pool1",
            "resblk1.0",
            "resblk1.1",
            "resblk2.0",
            "resblk2.1",
            "resblk3.0",
            "resblk3.1",
            "resblk4.0",
            "resblk4.1"
        ]
    );
    // the dump path and the in-memory path agree exactly
    assert_eq!(profile, randnet);
}

#[test]
fn synth_writes_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let digits = LabeledImages {
        rows: 28,
        cols: 28,
        channels: 1,
        pixels: (0..4 * 784).map(|i| (i % 251) as u8).collect(),
        labels: vec![1, 0, 1, 7],
    };
    let (imgs, labels) = write_mnist_idx(&digits);
    std::fs::write(tmp.path().join("img.idx"), imgs).unwrap();
    std::fs::write(tmp.path().join("lbl.idx"), labels).unwrap();
    let frogs = LabeledImages {
        rows: 32,
        cols: 32,
        channels: 3,
        pixels: (0..2 * 3072).map(|i| (i % 13 * 19) as u8).collect(),
        labels: vec![6, 6],
    };
    std::fs::write(tmp.path().join("cifar.bin"), write_cifar10_batch(&frogs).unwrap()).unwrap();
    let o = sropkit(
        &[
            "synth",
            "CASE_I",
            "0.5",
            "--mnist-images",
            "img.idx",
            "--mnist-labels",
            "lbl.idx",
            "--cifar",
            "cifar.bin",
            "--seed",
            "1",
            "--out",
            "ds",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let images = read_npy_file(tmp.path().join("ds/images.npy")).unwrap();
    assert_eq!(images.shape(), &[4, 28, 28]);
    let labels = read_npy_file(tmp.path().join("ds/labels.npy")).unwrap();
    assert_eq!(labels.data(), &NpyData::U8(vec![1, 0, 1, 7]));
    let prov: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("ds/provenance.json")).unwrap())
            .unwrap();
    assert_eq!(prov["provenance"]["frog_index"], 1);
    assert_eq!(prov["provenance"]["mode"], "CASE_I");
    assert_eq!(prov["provenance"]["blended_count"], 2);

    let bad = sropkit(
        &[
            "synth",
            "CASE_I",
            "1.5",
            "--mnist-images",
            "img.idx",
            "--mnist-labels",
            "lbl.idx",
            "--cifar",
            "cifar.bin",
        ],
        tmp.path(),
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn kde_finds_two_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..200)
        .map(|i| if i % 2 == 0 { 0.2 } else { 0.7 } + (i as f64 * 0.618).fract() * 0.04)
        .collect();
    write_npy_file(
        tmp.path().join("v.npy"),
        &NpyTensor::new(vec![200], NpyData::F64(values)).unwrap(),
    )
    .unwrap();
    let o = sropkit(&["kde", "v.npy", "--format", "json"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let curve: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("kde.json")).unwrap()).unwrap();
    assert_eq!(curve["peaks"].as_array().unwrap().len(), 2);
    write_npy_file(
        tmp.path().join("c.npy"),
        &NpyTensor::new(vec![3], NpyData::F64(vec![0.5; 3])).unwrap(),
    )
    .unwrap();
    assert_eq!(code(&sropkit(&["kde", "c.npy"], tmp.path())), 2);

    // three per-sample means (the NaN is skipped) against five pooled values
    let per_kernel = vec![0.2, 0.4, 0.5, 0.7, 0.3, f64::NAN];
    write_npy_file(
        tmp.path().join("k.npy"),
        &NpyTensor::new(vec![3, 2], NpyData::F64(per_kernel)).unwrap(),
    )
    .unwrap();
    let o = sropkit(&["kde", "k.npy"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("3 values"), "{}", stdout(&o));
    let o = sropkit(&["kde", "k.npy", "--pooled"], tmp.path());
    assert!(stdout(&o).starts_with("5 values"), "{}", stdout(&o));
}
