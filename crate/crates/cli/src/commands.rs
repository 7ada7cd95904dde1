use std::fmt::Write as _;
use std::io::Read as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::json;

use sropkit::io::{read_cifar10_batch, read_manifest, read_mnist_idx, read_npy_file, NpyData, NpyTensor};
use sropkit::randnet::{
    benchmark_downscale, build_from_config, export_activations, profile_manifest, profile_network, shipped,
    ChannelMode, Network, Preprocess, ProfileOptions, SropReference,
};
use sropkit::spectral::{
    power_spectrum_1d_with, srop_2d, srop_feature_map, srop_from_spectrum, MapSource, SpectralConfig,
    SpectrumScale,
};
use sropkit::stats::{kde_estimate, layer_stats, profile_series, ProfileTable, SropReport};
use sropkit::synth::{generate_dataset, BlendMode, BlendSpec};
use sropkit::tensor::{images_from_npy, load_image_dir, Tensor3};
use sropkit::Error;

use crate::output::{Emitter, RunRecord};
use crate::svg::{self, Series};
use crate::{Cli, Command, Common, Format};

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidParameter(msg.into()).into()
}

fn spectral_config(c: &Common) -> Result<SpectralConfig> {
    let cfg = SpectralConfig {
        kappa: c.kappa,
        scale: if c.power_spectrum {
            SpectrumScale::Power
        } else {
            SpectrumScale::Magnitude
        },
        exclude_dc: c.exclude_dc,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn profile_options(c: &Common) -> Result<ProfileOptions> {
    Ok(ProfileOptions {
        spectral: spectral_config(c)?,
        channels: if c.luminance {
            ChannelMode::Luminance
        } else {
            ChannelMode::Pooled
        },
        preprocess: if c.imagenet_norm {
            Preprocess::Imagenet
        } else {
            Preprocess::Raw
        },
        reference: if c.band_reference {
            SropReference::Band
        } else {
            SropReference::Input
        },
    })
}

/// Drops any `--out` from `args` and appends the resolved directory.
fn pin_out(args: &[String], out: &Path) -> Vec<String> {
    let mut pinned = Vec::with_capacity(args.len() + 2);
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            pinned.push(a.clone());
        }
    }
    pinned.push("--out".into());
    pinned.push(out.display().to_string());
    pinned
}

pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let cwd = std::env::current_dir()?;
    if let Command::Replay { run } = &cli.command {
        return replay(run, cli.common.out.as_deref(), &cwd);
    }
    run_inner(cli, argv, &cwd)
}

fn replay(run: &Path, out: Option<&Path>, cwd: &Path) -> Result<()> {
    let text = std::fs::read_to_string(run).with_context(|| format!("reading {}", run.display()))?;
    let record: RunRecord =
        serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", run.display())))?;
    let mut args = record.args.clone();
    if let Some(o) = out {
        args = pin_out(&args, &cwd.join(o));
    }
    let cli = Cli::try_parse_from(std::iter::once("sropkit".to_string()).chain(args.iter().cloned()))
        .map_err(|e| Error::InvalidInput(format!("recorded arguments no longer parse: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(invalid("a run record cannot replay another replay"));
    }
    std::env::set_current_dir(&record.cwd)
        .with_context(|| format!("entering recorded directory {}", record.cwd.display()))?;
    run_inner(cli, args, &record.cwd)
}

fn run_inner(cli: Cli, args: Vec<String>, cwd: &Path) -> Result<()> {
    let out = cwd.join(cli.common.out.clone().unwrap_or_else(|| PathBuf::from(".")));
    let mut emit = Emitter::new(out.clone(), &cli.common.formats)?;
    dispatch(&cli, &mut emit)?;
    let written = emit.finish(&pin_out(&args, &out), cwd)?;
    eprintln!("wrote {} file(s) to {}", written.len(), out.display());
    Ok(())
}

fn dispatch(cli: &Cli, emit: &mut Emitter) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Srop1d { file, band } => srop1d(c, emit, file, band.as_deref()),
        Command::Sropimg { npy } => sropimg(c, emit, npy),
        Command::Sroptensor { npy, name } => sroptensor(c, emit, npy, name),
        Command::Profile { manifest } => profile(c, emit, manifest),
        Command::Baseline { image_dir } => baseline(c, emit, image_dir),
        Command::Randnet {
            config,
            image_dir,
            limit,
            export,
        } => randnet(c, emit, config, image_dir, *limit, export.as_deref()),
        Command::Synth {
            mode,
            w,
            mnist_images,
            mnist_labels,
            cifar,
        } => synth(c, emit, mode, *w, mnist_images, mnist_labels, cifar),
        Command::Kde { npy, grid, pooled } => kde(emit, npy, *grid, *pooled),
        Command::Replay { .. } => unreachable!("handled before dispatch"),
    }
}

fn read_series(path: &Path) -> Result<Vec<f64>> {
    if path.extension().is_some_and(|e| e == "npy") {
        let t = read_npy_file(path)?;
        if t.shape().len() != 1 {
            return Err(invalid(format!(
                "expected a 1-D array, got shape {:?}",
                t.shape()
            )));
        }
        return Ok(t.to_f64());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.split(|ch: char| ch.is_whitespace() || ch == ',' || ch == ';')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("`{s}` is not a number")).into())
        })
        .collect()
}

fn srop1d(c: &Common, emit: &mut Emitter, file: &Path, band: Option<&str>) -> Result<()> {
    let cfg = spectral_config(c)?;
    let signal = read_series(file)?;
    let band = match band {
        None if c.exclude_dc => Some((1, signal.len() / 2)),
        None => None,
        Some(b) => {
            let (lo, hi) = b
                .split_once(':')
                .ok_or_else(|| invalid(format!("band `{b}` is not lo:hi")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| invalid(format!("band `{b}` is not lo:hi")))
            };
            Some((parse(lo)?, parse(hi)?))
        }
    };
    let spectrum = power_spectrum_1d_with(&signal, band, cfg.scale)?;
    let v = srop_from_spectrum(&spectrum, cfg.kappa)?;
    println!("bin {} normalized {}", v.bin, v.normalized);
    emit.emit(
        "srop1d",
        || {
            format!(
                "bin,normalized,kappa,band_lo,band_hi\n{},{},{},{},{}\n",
                v.bin,
                v.normalized,
                v.kappa,
                spectrum.band_lo(),
                spectrum.band_hi()
            )
        },
        || json!({ "srop": v, "band": [spectrum.band_lo(), spectrum.band_hi()], "spectrum": spectrum.values() }),
        || {
            let pts = spectrum
                .values()
                .iter()
                .enumerate()
                .map(|(i, y)| ((spectrum.band_lo() + i) as f64, *y))
                .collect();
            svg::line_chart(
                &format!("normalized spectrum, SROP at bin {}", v.bin),
                "bin",
                "share of energy",
                &[Series { label: "spectrum".into(), points: pts }],
            )
        },
    )
}

fn image_channels(img: &Tensor3, luminance: bool) -> Result<Tensor3> {
    Ok(if luminance && img.channels == 3 {
        img.luminance()?
    } else {
        img.clone()
    })
}

fn sropimg(c: &Common, emit: &mut Emitter, npy: &Path) -> Result<()> {
    let cfg = spectral_config(c)?;
    let images = images_from_npy(&read_npy_file(npy)?)?;
    let mut rows = Vec::new();
    for (i, img) in images.iter().enumerate() {
        let img = image_channels(img, c.luminance)?;
        for ch in 0..img.channels {
            let v = srop_2d(img.channel(ch), img.size, img.size, &cfg)?;
            println!(
                "image {i} channel {ch}: bin {} normalized {}",
                v.bin, v.normalized
            );
            rows.push((i, ch, v));
        }
    }
    emit.emit(
        "sropimg",
        || {
            let mut s = String::from("image,channel,bin,normalized\n");
            for (i, ch, v) in &rows {
                let _ = writeln!(s, "{i},{ch},{},{}", v.bin, v.normalized);
            }
            s
        },
        || {
            json!(rows
                .iter()
                .map(|(i, ch, v)| json!({"image": i, "channel": ch, "srop": v}))
                .collect::<Vec<_>>())
        },
        || {
            let pts = rows
                .iter()
                .enumerate()
                .map(|(k, (_, _, v))| (k as f64, v.normalized))
                .collect();
            svg::line_chart(
                "normalized SROP per image channel",
                "image channel",
                "SROP",
                &[Series {
                    label: "srop".into(),
                    points: pts,
                }],
            )
        },
    )
}

fn sroptensor(c: &Common, emit: &mut Emitter, npy: &Path, name: &str) -> Result<()> {
    let cfg = spectral_config(c)?;
    let t = read_npy_file(npy)?;
    let (count, channels, size) = match *t.shape() {
        [n, ch, h, w] if h == w => (n, ch, h),
        [ch, h, w] if h == w => (1, ch, h),
        ref s => return Err(invalid(format!("expected (C, n, n) or (N, C, n, n), got {s:?}"))),
    };
    let data = t.to_f32();
    let per = channels * size * size;
    let mut rows = Vec::new();
    for (i, chunk) in data.chunks_exact(per).take(count).enumerate() {
        let fm = sropkit::spectral::FeatureMapTensor::new(
            chunk.to_vec(),
            channels,
            size,
            name,
            MapSource::InputImage,
        )?;
        for (ch, v) in srop_feature_map(&fm, &cfg)?.into_iter().enumerate() {
            rows.push((i, ch, v));
        }
    }
    let values: Vec<Option<f64>> = rows.iter().map(|(_, _, v)| v.map(|v| v.normalized)).collect();
    let report = layer_stats(&values, name, size)?;
    println!(
        "{name}: mean {} median {} q1 {} q3 {} std {} ({} channel(s) skipped)",
        report.mean, report.median, report.q1, report.q3, report.std, report.skipped_channels
    );
    emit.emit(
        "sroptensor",
        || {
            let mut s = String::from("sample,channel,bin,normalized\n");
            for (i, ch, v) in &rows {
                match v {
                    Some(v) => writeln!(s, "{i},{ch},{},{}", v.bin, v.normalized),
                    None => writeln!(s, "{i},{ch},,"),
                }
                .expect("string write");
            }
            s
        },
        || json!(report),
        || {
            svg::box_chart(
                &format!("{name}: SROP quartiles"),
                "normalized SROP",
                &[name.to_string()],
                &[(report.q1, report.median, report.q3)],
            )
        },
    )
}

fn emit_profile(emit: &mut Emitter, stem: &str, title: &str, reports: &[SropReport]) -> Result<()> {
    let table = profile_series(reports)?;
    for r in &table.rows {
        println!(
            "{:<16} {:>4} mean {:.4} median {:.4}",
            r.layer, r.resolution, r.mean, r.median
        );
    }
    emit.emit(
        stem,
        || table.to_csv(),
        || json!({ "table": table, "reports": reports }),
        || log_mean_chart(title, &table),
    )?;
    if emit.wants(Format::Svg) {
        let names: Vec<String> = table.rows.iter().map(|r| r.layer.clone()).collect();
        let boxes: Vec<_> = table.rows.iter().map(|r| (r.q1, r.median, r.q3)).collect();
        emit.file(
            &format!("{stem}_box.svg"),
            svg::box_chart(&format!("{title}: quartiles"), "normalized SROP", &names, &boxes).as_bytes(),
        )?;
    }
    Ok(())
}

fn log_mean_chart(title: &str, table: &ProfileTable) -> String {
    let names: Vec<String> = table.rows.iter().map(|r| r.layer.clone()).collect();
    let pts = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i as f64, r.log_mean))
        .collect();
    svg::category_chart(
        title,
        "ln(mean SROP)",
        &names,
        &[Series {
            label: "mean".into(),
            points: pts,
        }],
    )
}

fn profile(c: &Common, emit: &mut Emitter, manifest: &Path) -> Result<()> {
    let opts = profile_options(c)?;
    let m = read_manifest(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let reports = profile_manifest(&m, base, &opts)?;
    emit_profile(
        emit,
        "profile",
        &format!("{} SROP profile", m.model_name),
        &reports,
    )
}

fn baseline(c: &Common, emit: &mut Emitter, dir: &Path) -> Result<()> {
    let opts = profile_options(c)?;
    let images = load_image_dir(dir)?;
    let reports = benchmark_downscale(&images, &opts)?;
    emit_profile(emit, "baseline", "benchmark max-pool ladder", &reports)
}

fn randnet(
    c: &Common,
    emit: &mut Emitter,
    config: &str,
    dir: &Path,
    limit: Option<usize>,
    export: Option<&Path>,
) -> Result<()> {
    let opts = profile_options(c)?;
    let spec = if Path::new(config).is_file() {
        build_from_config(&std::fs::read_to_string(config).with_context(|| format!("reading {config}"))?)?
    } else {
        shipped(config)?
    };
    let mut images = load_image_dir(dir)?;
    if let Some(n) = limit {
        if n == 0 {
            return Err(invalid("--limit must be positive"));
        }
        images.truncate(n);
    }
    let net = Network::new(spec, c.seed);
    if let Some(dir) = export {
        export_activations(&net, &images, &opts, &format!("{} images", images.len()), dir)?;
    }
    let reports = profile_network(&net, &images, &opts)?;
    emit_profile(
        emit,
        "randnet",
        &format!("randomized {} (seed {})", net.spec().name, c.seed),
        &reports,
    )
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .with_context(|| format!("decompressing {}", path.display()))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn synth(
    c: &Common,
    emit: &mut Emitter,
    mode: &str,
    w: f32,
    images: &Path,
    labels: &Path,
    cifar: &Path,
) -> Result<()> {
    let spec = BlendSpec {
        mode: mode.parse::<BlendMode>()?,
        w,
        seed: c.seed,
    };
    let digits = read_mnist_idx(&read_maybe_gz(images)?, &read_maybe_gz(labels)?)?;
    let frogs = read_cifar10_batch(&read_maybe_gz(cifar)?)?;
    let ds = generate_dataset(&spec, &digits, &frogs)?;
    let n = ds.len();
    emit.npy(
        "images.npy",
        &NpyTensor::new(vec![n, ds.rows, ds.cols], NpyData::F32(ds.images.clone()))?,
    )?;
    emit.npy(
        "labels.npy",
        &NpyTensor::new(vec![n], NpyData::U8(ds.labels.clone()))?,
    )?;
    let record = json!({
        "provenance": ds.provenance,
        "images": { "file": "images.npy", "shape": [n, ds.rows, ds.cols], "dtype": "f32" },
        "labels": { "file": "labels.npy", "shape": [n], "dtype": "u8" },
        "sources": {
            "mnist_images": images,
            "mnist_labels": labels,
            "cifar": cifar,
        },
    });
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    emit.file("provenance.json", text.as_bytes())?;
    println!(
        "{} samples, {} blended with frog #{} at w = {}",
        n, ds.provenance.blended_count, ds.provenance.frog_index, w
    );
    Ok(())
}

fn kde(emit: &mut Emitter, npy: &Path, grid: usize, pooled: bool) -> Result<()> {
    let t = read_npy_file(npy)?;
    let all = t.to_f64();
    let values: Vec<f64> = match *t.shape() {
        [_, k] if !pooled && k > 0 => all
            .chunks(k)
            .filter_map(|row| {
                let live: Vec<f64> = row.iter().copied().filter(|v| !v.is_nan()).collect();
                (!live.is_empty()).then(|| live.iter().sum::<f64>() / live.len() as f64)
            })
            .collect(),
        _ => all.into_iter().filter(|v| !v.is_nan()).collect(),
    };
    let curve = kde_estimate(&values, grid)?;
    println!(
        "{} values, bandwidth {:.5}, peaks at {:?}",
        values.len(),
        curve.bandwidth,
        curve.peaks
    );
    emit.emit(
        "kde",
        || {
            let mut s = String::from("x,density\n");
            for (x, d) in curve.grid.iter().zip(&curve.density) {
                let _ = writeln!(s, "{x},{d}");
            }
            s
        },
        || json!(curve),
        || {
            let pts = curve
                .grid
                .iter()
                .copied()
                .zip(curve.density.iter().copied())
                .collect();
            svg::line_chart(
                &format!("SROP density (bandwidth {:.4})", curve.bandwidth),
                "normalized SROP",
                "density",
                &[Series {
                    label: "kde".into(),
                    points: pts,
                }],
            )
        },
    )
}
