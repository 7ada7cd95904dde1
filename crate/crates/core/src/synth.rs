//! Frog + digit blends with a controlled share of distracting content.
//!
//! CASE I blends the frog into the samples of digit class 1 only, so the frog
//! becomes a perfect cue for that class. CASE II blends it into every sample.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::datasets::{LabeledImages, CIFAR_FROG};

/// Bilinear resize of an `h x w x c` (HWC) image with half-pixel alignment;
/// samples outside the source are clamped to the edge.
pub fn resize_bilinear(
    img: &[f32],
    h: usize,
    w: usize,
    c: usize,
    target: (usize, usize),
) -> Result<Vec<f32>> {
    if h < 2 || w < 2 || c == 0 {
        return Err(Error::InvalidInput(format!(
            "resize needs at least a 2x2 source, got {h}x{w}x{c}"
        )));
    }
    if img.len() != h * w * c {
        return Err(Error::InvalidInput(format!(
            "{} values do not fill {h}x{w}x{c}",
            img.len()
        )));
    }
    let (th, tw) = target;
    if th == 0 || tw == 0 {
        return Err(Error::InvalidInput("empty resize target".into()));
    }
    let axis = |dst: usize, src_len: usize, dst_len: usize| -> (usize, usize, f32) {
        let pos =
            ((dst as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5).clamp(0.0, (src_len - 1) as f64);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(src_len - 1);
        (i0, i1, (pos - i0 as f64) as f32)
    };
    let mut out = Vec::with_capacity(th * tw * c);
    for y in 0..th {
        let (y0, y1, fy) = axis(y, h, th);
        for x in 0..tw {
            let (x0, x1, fx) = axis(x, w, tw);
            for ch in 0..c {
                let at = |yy: usize, xx: usize| img[(yy * w + xx) * c + ch];
                let top = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
                let bottom = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
                out.push(top + fy * (bottom - top));
            }
        }
    }
    Ok(out)
}

/// Rec.601 luminance of an HWC RGB image.
pub fn to_grayscale(img: &[f32]) -> Result<Vec<f32>> {
    if img.len() % 3 != 0 {
        return Err(Error::InvalidInput(format!(
            "{} values are not whole RGB pixels",
            img.len()
        )));
    }
    Ok(img
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect())
}

/// Pixelwise `w * frog + (1 - w) * digit`.
pub fn blend_case(digit: &[f32], frog: &[f32], w: f32) -> Result<Vec<f32>> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidParameter(format!("w must lie in [0, 1], got {w}")));
    }
    if digit.len() != frog.len() {
        return Err(Error::InvalidInput(format!(
            "digit has {} pixels, frog has {}",
            digit.len(),
            frog.len()
        )));
    }
    if digit.iter().chain(frog).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput("pixels must lie in [0, 1]".into()));
    }
    Ok(digit
        .iter()
        .zip(frog)
        .map(|(d, f)| (w * f + (1.0 - w) * d).clamp(0.0, 1.0))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlendMode {
    /// Frog only in samples labelled 1.
    #[serde(rename = "CASE_I")]
    CaseI,
    /// Frog in every sample.
    #[serde(rename = "CASE_II")]
    CaseII,
}

impl std::str::FromStr for BlendMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "casei" | "i" | "1" => Ok(BlendMode::CaseI),
            "caseii" | "ii" | "2" => Ok(BlendMode::CaseII),
            _ => Err(Error::InvalidParameter(format!(
                "unknown blend mode `{s}` (expected CASE_I or CASE_II)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlendSpec {
    pub mode: BlendMode,
    pub w: f32,
    pub seed: u64,
}

/// Where a generated dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mode: BlendMode,
    pub w: f32,
    pub seed: u64,
    /// Index of the frog within its CIFAR-10 batch.
    pub frog_index: usize,
    pub digit_count: usize,
    pub blended_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub rows: usize,
    pub cols: usize,
    /// `N x rows x cols`, values in `[0, 1]`.
    pub images: Vec<f32>,
    pub labels: Vec<u8>,
    pub provenance: Provenance,
}

impl SynthDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let n = self.rows * self.cols;
        &self.images[i * n..(i + 1) * n]
    }
}

/// Picks frog number `seed % count` among the frogs of a CIFAR-10 batch.
pub fn pick_frog(batch: &LabeledImages, seed: u64) -> Result<usize> {
    let frogs: Vec<usize> = (0..batch.len())
        .filter(|&i| batch.labels[i] == CIFAR_FROG)
        .collect();
    if frogs.is_empty() {
        return Err(Error::InvalidInput("the CIFAR-10 batch contains no frog".into()));
    }
    Ok(frogs[(seed % frogs.len() as u64) as usize])
}

/// Grayscale frog resized to `rows x cols`, from a CHW RGB record.
pub fn frog_gray(batch: &LabeledImages, index: usize, rows: usize, cols: usize) -> Result<Vec<f32>> {
    if batch.channels != 3 {
        return Err(Error::InvalidInput("frog source must be RGB".into()));
    }
    let (h, w) = (batch.rows, batch.cols);
    let chw = batch.image(index);
    let plane = h * w;
    let hwc: Vec<f32> = (0..plane)
        .flat_map(|i| (0..3).map(move |c| chw[c * plane + i] as f32 / 255.0))
        .collect();
    let resized = resize_bilinear(&hwc, h, w, 3, (rows, cols))?;
    // bilinear weights are convex, but rounding may step a hair past 1
    Ok(to_grayscale(&resized)?
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0))
        .collect())
}

/// Blends a frog from `frogs` into the digits as `spec` prescribes. Labels are kept.
pub fn generate_dataset(
    spec: &BlendSpec,
    digits: &LabeledImages,
    frogs: &LabeledImages,
) -> Result<SynthDataset> {
    if !(0.0..=1.0).contains(&spec.w) {
        return Err(Error::InvalidParameter(format!(
            "w must lie in [0, 1], got {}",
            spec.w
        )));
    }
    if digits.is_empty() {
        return Err(Error::InvalidInput("empty digit source".into()));
    }
    if digits.channels != 1 {
        return Err(Error::InvalidInput("digits must be single-channel".into()));
    }
    let frog_index = pick_frog(frogs, spec.seed)?;
    let frog = frog_gray(frogs, frog_index, digits.rows, digits.cols)?;
    let targets = |label: u8| match spec.mode {
        BlendMode::CaseI => label == 1,
        BlendMode::CaseII => true,
    };
    let per = digits.rows * digits.cols;
    let blocks = (0..digits.len())
        .into_par_iter()
        .map(|i| {
            let digit = digits.image_unit(i);
            if targets(digits.labels[i]) {
                blend_case(&digit, &frog, spec.w)
            } else {
                Ok(digit)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut images = Vec::with_capacity(per * digits.len());
    blocks.iter().for_each(|b| images.extend_from_slice(b));
    Ok(SynthDataset {
        rows: digits.rows,
        cols: digits.cols,
        images,
        labels: digits.labels.clone(),
        provenance: Provenance {
            mode: spec.mode,
            w: spec.w,
            seed: spec.seed,
            frog_index,
            digit_count: digits.len(),
            blended_count: digits.labels.iter().filter(|&&l| targets(l)).count(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn digits() -> LabeledImages {
        // ten 28x28 digits, label i, with a bright bar in row 3 + i
        let mut pixels = vec![0u8; 10 * 784];
        for i in 0..10 {
            for x in 4..24 {
                pixels[i * 784 + (3 + i) * 28 + x] = 255;
            }
        }
        LabeledImages {
            rows: 28,
            cols: 28,
            channels: 1,
            pixels,
            labels: (0..10).collect(),
        }
    }

    fn frogs() -> LabeledImages {
        let mut pixels = Vec::new();
        let labels = vec![2, 6, 6];
        for (k, _) in labels.iter().enumerate() {
            pixels.extend((0..3072).map(|i| ((i * 7 + k * 13) % 256) as u8));
        }
        LabeledImages {
            rows: 32,
            cols: 32,
            channels: 3,
            pixels,
            labels,
        }
    }

    #[test]
    fn resize_examples() {
        let c = resize_bilinear(&[0.3; 5 * 7 * 2], 5, 7, 2, (28, 28)).unwrap();
        assert!(c.iter().all(|v| (v - 0.3).abs() < 1e-6));

        let up = resize_bilinear(&[0.0, 1.0, 0.0, 1.0], 2, 2, 1, (4, 4)).unwrap();
        for row in up.chunks(4) {
            assert!(row.windows(2).all(|p| p[0] <= p[1]), "{row:?}");
        }
        assert_eq!(&up[..4], &[0.0, 0.25, 0.75, 1.0]);

        assert!(resize_bilinear(&[1.0], 1, 1, 1, (2, 2)).is_err());
        assert!(resize_bilinear(&[1.0; 4], 2, 2, 1, (0, 2)).is_err());
    }

    #[test]
    fn grayscale_examples() {
        assert_eq!(to_grayscale(&[1.0, 1.0, 1.0]).unwrap(), vec![1.0]);
        assert_eq!(to_grayscale(&[0.0, 1.0, 0.0]).unwrap(), vec![0.587]);
        let g = to_grayscale(&[0.4, 0.4, 0.4]).unwrap()[0];
        assert!((g - 0.4).abs() < 1e-7);
        assert!(to_grayscale(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn blend_examples() {
        let d = [0.4f32, 0.1];
        let f = [0.8f32, 0.9];
        assert_eq!(blend_case(&d, &f, 0.0).unwrap(), d.to_vec());
        assert_eq!(blend_case(&d, &f, 1.0).unwrap(), f.to_vec());
        assert_eq!(blend_case(&d, &f, 0.25).unwrap()[0], 0.5);
        assert!(blend_case(&d, &f, 1.5).is_err());
        assert!(blend_case(&d, &f, -0.1).is_err());
        assert!(blend_case(&d, &[0.1], 0.5).is_err());
        assert!(blend_case(&[1.2, 0.0], &f, 0.5).is_err());
    }

    #[test]
    fn case_one_touches_only_label_one() {
        let digits = digits();
        let spec = BlendSpec {
            mode: BlendMode::CaseI,
            w: 0.5,
            seed: 0,
        };
        let out = generate_dataset(&spec, &digits, &frogs()).unwrap();
        assert_eq!(out.labels, digits.labels);
        for i in 0..10 {
            let same = out.image(i) == digits.image_unit(i).as_slice();
            assert_eq!(same, i != 1, "sample {i}");
        }
        assert_eq!(out.provenance.frog_index, 1);
        assert_eq!(out.provenance.blended_count, 1);
    }

    #[test]
    fn case_two_touches_every_sample() {
        let digits = digits();
        let spec = BlendSpec {
            mode: BlendMode::CaseII,
            w: 0.5,
            seed: 1,
        };
        let out = generate_dataset(&spec, &digits, &frogs()).unwrap();
        assert_eq!(out.provenance.frog_index, 2);
        let frog = frog_gray(&frogs(), 2, 28, 28).unwrap();
        for i in 0..10 {
            let orig = digits.image_unit(i);
            for ((o, d), f) in out.image(i).iter().zip(&orig).zip(&frog) {
                assert_eq!(o != d, f != d);
            }
        }
        assert_eq!(generate_dataset(&spec, &digits, &frogs()).unwrap(), out);
    }

    #[test]
    fn full_weight_collapses_class_one() {
        let mut digits = digits();
        digits.labels = vec![1, 1, 1, 0, 0, 0, 1, 1, 1, 1];
        let spec = BlendSpec {
            mode: BlendMode::CaseI,
            w: 1.0,
            seed: 0,
        };
        let out = generate_dataset(&spec, &digits, &frogs()).unwrap();
        let first = out.image(0).to_vec();
        for i in [1, 2, 6, 7, 8, 9] {
            assert_eq!(out.image(i), first.as_slice());
        }
    }

    #[test]
    fn generation_errors() {
        let spec = BlendSpec {
            mode: BlendMode::CaseII,
            w: 0.5,
            seed: 0,
        };
        let mut empty = digits();
        empty.pixels.clear();
        empty.labels.clear();
        assert!(generate_dataset(&spec, &empty, &frogs()).is_err());
        let mut no_frog = frogs();
        no_frog.labels = vec![0, 1, 2];
        assert!(generate_dataset(&spec, &digits(), &no_frog).is_err());
        let bad = BlendSpec { w: 2.0, ..spec };
        assert!(generate_dataset(&bad, &digits(), &frogs()).is_err());
        assert_eq!("case_ii".parse::<BlendMode>().unwrap(), BlendMode::CaseII);
        assert!("case_iii".parse::<BlendMode>().is_err());
    }

    proptest! {
        #[test]
        fn downscale_stays_in_source_range(
            vals in prop::collection::vec(0.0f32..1.0, 32 * 32),
        ) {
            let out = resize_bilinear(&vals, 32, 32, 1, (28, 28)).unwrap();
            let lo = vals.iter().copied().fold(f32::INFINITY, f32::min);
            let hi = vals.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            prop_assert!(out.iter().all(|v| *v >= lo - 1e-6 && *v <= hi + 1e-6));
        }

        #[test]
        fn blends_stay_in_unit_range(
            d in prop::collection::vec(0.0f32..=1.0, 16),
            f in prop::collection::vec(0.0f32..=1.0, 16),
            w in 0.0f32..=1.0,
        ) {
            let out = blend_case(&d, &f, w).unwrap();
            prop_assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
