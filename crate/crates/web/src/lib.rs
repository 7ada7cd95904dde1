//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function takes plain numbers and strings and returns a JSON
//! document, so the page needs no generated type glue beyond `wasm-bindgen`'s.
//! The `*_json` functions hold the logic and are what the native tests call.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use sropkit::randnet::layers::maxpool;
use sropkit::randnet::{map_srops, ProfileOptions};
use sropkit::spectral::{
    power_spectrum_1d, power_spectrum_2d, radial_bin_count, radial_sums, srop_2d, srop_from_spectrum,
    SpectralConfig, Spectrum1D,
};
use sropkit::tensor::Tensor3;

const MAX_SIZE: usize = 512;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_signal(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

#[derive(Serialize)]
struct SpectrumView<'a> {
    values: &'a [f64],
    band_lo: usize,
    band_hi: usize,
    bin: usize,
    normalized: f64,
}

fn view(s: &Spectrum1D, kappa: f64) -> Result<serde_json::Value, String> {
    let v = srop_from_spectrum(s, kappa).map_err(err)?;
    serde_json::to_value(SpectrumView {
        values: s.values(),
        band_lo: s.band_lo(),
        band_hi: s.band_hi(),
        bin: v.bin,
        normalized: v.normalized,
    })
    .map_err(err)
}

/// SROP of a whitespace- or comma-separated series.
pub fn signal_json(text: &str, kappa: f64) -> Result<String, String> {
    let signal = parse_signal(text)?;
    let s = power_spectrum_1d(&signal, None).map_err(err)?;
    Ok(view(&s, kappa)?.to_string())
}

/// Synthetic `n x n` test images. `param` is the pattern's length scale in pixels
/// (or cycles per image for `grating`).
pub fn pattern(kind: &str, n: usize, param: f64, seed: u64) -> Result<Vec<f64>, String> {
    if !(3..=MAX_SIZE).contains(&n) {
        return Err(format!("size must be in 3..={MAX_SIZE}, got {n}"));
    }
    if !param.is_finite() || param < 0.0 {
        return Err(format!("parameter must be a non-negative number, got {param}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let img = match kind {
        "noise" => (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect(),
        "smooth" => {
            let x: Vec<f64> = (0..n * n).map(|_| StandardNormal.sample(&mut rng)).collect();
            box_blur(&x, n, param.round() as usize)
        }
        "grating" => {
            let (s, c) = (30f64.to_radians().sin(), 30f64.to_radians().cos());
            (0..n * n)
                .map(|i| {
                    let (y, x) = ((i / n) as f64, (i % n) as f64);
                    (2.0 * std::f64::consts::PI * param * (x * c + y * s) / nf).sin()
                })
                .collect()
        }
        "checker" => {
            let side = param.max(1.0);
            (0..n * n)
                .map(|i| {
                    let (y, x) = ((i / n) as f64 / side, (i % n) as f64 / side);
                    0.25 + 0.5 * ((x.floor() + y.floor()) as i64 % 2) as f64
                })
                .collect()
        }
        "disk" => {
            let c = (n / 2) as f64;
            (0..n * n)
                .map(|i| {
                    let (y, x) = ((i / n) as f64 - c, (i % n) as f64 - c);
                    ((x * x + y * y).sqrt() <= param) as u8 as f64
                })
                .collect()
        }
        other => return Err(format!("unknown pattern `{other}`")),
    };
    Ok(img)
}

/// Circular separable box filter of width `2 * radius + 1`.
fn box_blur(x: &[f64], n: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return x.to_vec();
    }
    let w = (2 * radius + 1) as f64;
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for d in 0..=2 * radius {
                    let t = (b + n * (radius / n + 1) + d - radius) % n;
                    acc += if horizontal {
                        src[a * n + t]
                    } else {
                        src[t * n + a]
                    };
                }
                if horizontal {
                    out[a * n + b] = acc / w;
                } else {
                    out[b * n + a] = acc / w;
                }
            }
        }
        out
    };
    pass(&pass(x, true), false)
}

/// Linear map of `values` onto 0..=255 for display.
fn to_gray(values: impl Iterator<Item = f64> + Clone) -> Vec<u8> {
    let lo = values.clone().fold(f64::INFINITY, f64::min);
    let hi = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi - lo > 1e-300 { hi - lo } else { 1.0 };
    values.map(|v| ((v - lo) / span * 255.0).round() as u8).collect()
}

/// Image, centred log spectrum, radial profile and SROP of a synthetic pattern.
pub fn image_json(kind: &str, n: usize, param: f64, seed: u64, kappa: f64) -> Result<String, String> {
    let img = pattern(kind, n, param, seed)?;
    let cfg = SpectralConfig::with_kappa(kappa);
    cfg.validate().map_err(err)?;
    let spec = power_spectrum_2d(&img, n, n).map_err(err)?;
    let sums = radial_sums(&spec).map_err(err)?;
    let total = sums.in_disk() + sums.dropped;
    let srop = srop_2d(&img, n, n, &cfg).map_err(err)?;
    let profile = Spectrum1D::from_raw(sums.sums.clone(), 0).map_err(err)?;
    Ok(json!({
        "n": n,
        "m": radial_bin_count(n).map_err(err)?,
        "image": to_gray(img.iter().copied()),
        "spectrum": to_gray(spec.grid().iter().map(|v| v.ln_1p())),
        "profile": profile.values(),
        "bin": srop.bin,
        "normalized": srop.normalized,
        "dropped_fraction": if total > 0.0 { sums.dropped / total } else { 0.0 },
    })
    .to_string())
}

/// Normalized SROP after each successive 2x2 max-pool, referred to the input band.
pub fn ladder_json(kind: &str, n: usize, param: f64, seed: u64, kappa: f64) -> Result<String, String> {
    let img = pattern(kind, n, param, seed)?;
    let opts = ProfileOptions {
        spectral: SpectralConfig::with_kappa(kappa),
        ..Default::default()
    };
    opts.spectral.validate().map_err(err)?;
    let mut t = Tensor3::new(1, n, img.iter().map(|&v| v as f32).collect()).map_err(err)?;
    let mut levels = Vec::new();
    for level in 0..=5 {
        if level > 0 {
            if t.size / 2 < 3 {
                break;
            }
            t = maxpool(&t, 2, 2, 0).map_err(err)?;
        }
        let v = map_srops(&t, "level", n, &opts).map_err(err)?[0];
        levels.push(json!({
            "name": if level == 0 { "input".to_string() } else { format!("pool{level}") },
            "size": t.size,
            "normalized": v,
        }));
    }
    Ok(json!({ "levels": levels }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn signal_srop(text: &str, kappa: f64) -> Result<String, JsValue> {
    js(signal_json(text, kappa))
}

#[wasm_bindgen]
pub fn image_srop(kind: &str, n: usize, param: f64, seed: u32, kappa: f64) -> Result<String, JsValue> {
    js(image_json(kind, n, param, seed.into(), kappa))
}

#[wasm_bindgen]
pub fn pool_ladder(kind: &str, n: usize, param: f64, seed: u32, kappa: f64) -> Result<String, JsValue> {
    js(ladder_json(kind, n, param, seed.into(), kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn signal_sine_rolls_off_at_its_frequency() {
        let text: Vec<String> = (0..64)
            .map(|t| {
                (2.0 * std::f64::consts::PI * 5.0 * t as f64 / 64.0)
                    .sin()
                    .to_string()
            })
            .collect();
        let v = parse(signal_json(&text.join(", "), 0.85));
        assert_eq!(v["bin"], 5);
        assert_eq!(v["band_hi"], 32);
        assert!(signal_json("1 x 3", 0.85).unwrap_err().contains("`x`"));
        assert!(signal_json("0 0 0", 0.85).is_err());
        assert!(signal_json("1 2 3", 1.5).is_err());
    }

    #[test]
    fn image_payload_shapes() {
        let v = parse(image_json("noise", 32, 0.0, 1, 0.85));
        assert_eq!(v["image"].as_array().unwrap().len(), 32 * 32);
        assert_eq!(v["spectrum"].as_array().unwrap().len(), 32 * 32);
        assert_eq!(
            v["profile"].as_array().unwrap().len(),
            v["m"].as_u64().unwrap() as usize + 1
        );
        let x = v["normalized"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x));
        assert!(image_json("plaid", 32, 0.0, 1, 0.85).is_err());
        assert!(image_json("noise", 2, 0.0, 1, 0.85).is_err());
    }

    #[test]
    fn smoothing_lowers_the_rolloff() {
        let srop = |r: f64| {
            parse(image_json("smooth", 64, r, 3, 0.85))["normalized"]
                .as_f64()
                .unwrap()
        };
        assert!(srop(0.0) > srop(2.0));
        assert!(srop(2.0) > srop(6.0));
    }

    #[test]
    fn box_blur_keeps_the_mean() {
        let x: Vec<f64> = (0..49).map(|i| (i * 7 % 11) as f64).collect();
        let y = box_blur(&x, 7, 9);
        let (a, b): (f64, f64) = (x.iter().sum(), y.iter().sum());
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn ladder_halves_until_the_next_map_would_be_below_three() {
        let v = parse(ladder_json("noise", 64, 0.0, 0, 0.85));
        let levels = v["levels"].as_array().unwrap();
        let sizes: Vec<u64> = levels.iter().map(|l| l["size"].as_u64().unwrap()).collect();
        assert_eq!(sizes, [64, 32, 16, 8, 4]);
        let vals: Vec<f64> = levels.iter().map(|l| l["normalized"].as_f64().unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    }

    #[test]
    fn constant_pattern_is_zero() {
        let v = parse(image_json("checker", 16, 100.0, 0, 0.85));
        assert_eq!(v["normalized"], 0.0);
    }
}
