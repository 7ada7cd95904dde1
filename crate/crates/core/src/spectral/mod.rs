//! Spectra and spectral roll-off points (SROPs).
//!
//! A roll-off point is the lowest frequency bin below which a fraction `kappa`
//! of the energy in a band lies. One-dimensional signals use the one-sided DFT
//! magnitude; images are first reduced to a 1-D profile by summing the centred
//! 2-D spectrum over unit-width annuli (see [`radial`]).

mod feature_map;
mod fft;
mod radial;

pub use feature_map::{srop_feature_map, FeatureMapTensor, MapSource};
pub use radial::{
    power_spectrum_2d, radial_bin_count, radial_profile, radial_sums, srop_2d, RadialSums, Spectrum2D,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy fraction used throughout unless overridden.
pub const DEFAULT_KAPPA: f64 = 0.85;

/// Relative slack when comparing a cumulative sum against `kappa * total`.
///
/// Bins that reach the target only up to summation round-off still count as
/// reaching it, so e.g. 85 bins of 0.01 meet kappa = 0.85.
const CUMULATIVE_SLACK: f64 = 1e-12;

/// What quantity is accumulated per frequency bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumScale {
    /// `|F(k)|`
    #[default]
    Magnitude,
    /// `|F(k)|^2`
    Power,
}

impl SpectrumScale {
    #[inline]
    pub(crate) fn apply(self, re: f64, im: f64) -> f64 {
        match self {
            SpectrumScale::Magnitude => re.hypot(im),
            SpectrumScale::Power => re * re + im * im,
        }
    }
}

/// Knobs shared by every SROP computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub kappa: f64,
    pub scale: SpectrumScale,
    /// Start the band at bin 1 instead of the DC bin.
    pub exclude_dc: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            scale: SpectrumScale::Magnitude,
            exclude_dc: false,
        }
    }
}

impl SpectralConfig {
    pub fn with_kappa(kappa: f64) -> Self {
        Self {
            kappa,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_kappa(self.kappa)
    }
}

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "kappa must lie in (0, 1], got {kappa}"
        )))
    }
}

/// A spectrum over the bins `band_lo..=band_hi`, normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D {
    values: Vec<f64>,
    band_lo: usize,
    band_hi: usize,
}

impl Spectrum1D {
    /// Normalizes `raw` (the values of bins `band_lo..`) to unit sum.
    pub fn from_raw(raw: Vec<f64>, band_lo: usize) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        if raw.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "spectrum values must be finite and non-negative".into(),
            ));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroEnergy);
        }
        let band_hi = band_lo + raw.len() - 1;
        let values = raw.into_iter().map(|v| v / total).collect();
        Ok(Self {
            values,
            band_lo,
            band_hi,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn band_lo(&self) -> usize {
        self.band_lo
    }

    pub fn band_hi(&self) -> usize {
        self.band_hi
    }

    /// Value of absolute bin `k`, zero outside the band.
    pub fn get(&self, k: usize) -> f64 {
        if k < self.band_lo || k > self.band_hi {
            0.0
        } else {
            self.values[k - self.band_lo]
        }
    }
}

/// A roll-off point together with its band-normalized position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SropValue {
    pub bin: usize,
    /// `(bin - b1) / (b2 - b1)`, in `[0, 1]`.
    pub normalized: f64,
    pub kappa: f64,
}

/// One-sided DFT spectrum of a real signal, normalized over `band`.
///
/// The default band is the whole one-sided range `0..=len/2`.
pub fn power_spectrum_1d(signal: &[f64], band: Option<(usize, usize)>) -> Result<Spectrum1D> {
    power_spectrum_1d_with(signal, band, SpectrumScale::Magnitude)
}

pub fn power_spectrum_1d_with(
    signal: &[f64],
    band: Option<(usize, usize)>,
    scale: SpectrumScale,
) -> Result<Spectrum1D> {
    if signal.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "signal needs at least 2 samples, got {}",
            signal.len()
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("signal contains non-finite samples".into()));
    }
    let nyquist = signal.len() / 2;
    let (lo, hi) = band.unwrap_or((0, nyquist));
    if lo > hi || hi > nyquist {
        return Err(Error::InvalidInput(format!(
            "band ({lo}, {hi}) outside [0, {nyquist}]"
        )));
    }
    if signal.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let spectrum = fft::dft_real(signal);
    let raw = spectrum[lo..=hi]
        .iter()
        .map(|c| scale.apply(c.re, c.im))
        .collect();
    Spectrum1D::from_raw(raw, lo)
}

/// Smallest bin whose cumulative energy from the band start reaches `kappa` of the total.
pub fn srop_from_spectrum(s: &Spectrum1D, kappa: f64) -> Result<SropValue> {
    check_kappa(kappa)?;
    let bin = rolloff_index(s.values(), kappa).ok_or(Error::ZeroEnergy)? + s.band_lo;
    Ok(SropValue {
        bin,
        normalized: normalize_srop(bin, s.band_lo, s.band_hi)?,
        kappa,
    })
}

/// Index into `values` of the roll-off point, or `None` when the sum is zero.
pub(crate) fn rolloff_index(values: &[f64], kappa: f64) -> Option<usize> {
    let total: f64 = values.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = kappa * total * (1.0 - CUMULATIVE_SLACK);
    let mut cumulative = 0.0;
    for (i, v) in values.iter().enumerate() {
        cumulative += v;
        if cumulative >= target {
            return Some(i);
        }
    }
    Some(values.len() - 1)
}

/// Maps a roll-off bin to `[0, 1]` relative to the band edges.
pub fn normalize_srop(bin: usize, b1: usize, b2: usize) -> Result<f64> {
    if bin < b1 || bin > b2 {
        return Err(Error::InvalidInput(format!(
            "bin {bin} outside band ({b1}, {b2})"
        )));
    }
    if b1 == b2 {
        return Ok(0.0);
    }
    Ok((bin - b1) as f64 / (b2 - b1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_dft_magnitudes(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let phase = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                    re += v * phase.cos();
                    im += v * phase.sin();
                }
                re.hypot(im)
            })
            .collect()
    }

    #[test]
    fn constant_signal_is_all_dc() {
        let s = power_spectrum_1d(&[5.0; 4], None).unwrap();
        assert_eq!((s.band_lo(), s.band_hi()), (0, 2));
        assert_eq!(s.values(), &[1.0, 0.0, 0.0]);
        let v = srop_from_spectrum(&s, DEFAULT_KAPPA).unwrap();
        assert_eq!(v.bin, 0);
        assert_eq!(v.normalized, 0.0);
    }

    #[test]
    fn sine_concentrates_in_its_bin() {
        let x: Vec<f64> = (0..64)
            .map(|t| (2.0 * std::f64::consts::PI * 5.0 * t as f64 / 64.0).sin())
            .collect();
        let s = power_spectrum_1d(&x, None).unwrap();
        let oracle = direct_dft_magnitudes(&x);
        let total: f64 = oracle.iter().sum();
        for (k, o) in oracle.iter().enumerate() {
            assert!((s.values()[k] - o / total).abs() < 1e-9, "bin {k}");
        }
        assert!(s.values()[5] > 0.999);
        assert_eq!(srop_from_spectrum(&s, 0.85).unwrap().bin, 5);
    }

    #[test]
    fn uniform_spectrum_rolls_off_at_85() {
        let s = Spectrum1D::from_raw(vec![0.01; 100], 0).unwrap();
        let v = srop_from_spectrum(&s, 0.85).unwrap();
        assert_eq!(v.bin, 84);
        assert!((v.normalized - 84.0 / 99.0).abs() < 1e-12);
    }

    #[test]
    fn mass_at_band_start() {
        let s = Spectrum1D::from_raw(vec![0.0, 0.0, 3.0, 0.0, 0.0], 0).unwrap();
        let s2 = Spectrum1D::from_raw(vec![3.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(srop_from_spectrum(&s, 0.85).unwrap().bin, 2);
        let v = srop_from_spectrum(&s2, 0.85).unwrap();
        assert_eq!((v.bin, v.normalized), (2, 0.0));
    }

    #[test]
    fn kappa_one_takes_whole_band() {
        let s = Spectrum1D::from_raw(vec![0.3, 0.2, 0.1, 0.05], 3).unwrap();
        let v = srop_from_spectrum(&s, 1.0).unwrap();
        assert_eq!((v.bin, v.normalized), (6, 1.0));
    }

    #[test]
    fn normalization_edges() {
        assert!((normalize_srop(84, 0, 99).unwrap() - 0.848_484_848_484_848_5).abs() < 1e-15);
        assert_eq!(normalize_srop(7, 7, 20).unwrap(), 0.0);
        assert_eq!(normalize_srop(20, 7, 20).unwrap(), 1.0);
        assert_eq!(normalize_srop(4, 4, 4).unwrap(), 0.0);
        assert!(normalize_srop(3, 4, 9).is_err());
        assert!(normalize_srop(10, 4, 9).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            power_spectrum_1d(&[], None),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            power_spectrum_1d(&[1.0], None),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            power_spectrum_1d(&[0.0; 8], None),
            Err(Error::ZeroEnergy)
        ));
        assert!(matches!(
            power_spectrum_1d(&[1.0; 8], Some((0, 5))),
            Err(Error::InvalidInput(_))
        ));
        // energy exists but not inside the band
        assert!(matches!(
            power_spectrum_1d(&[1.0; 8], Some((1, 4))),
            Err(Error::ZeroEnergy)
        ));
        let s = power_spectrum_1d(&[1.0, 2.0, 0.5, 3.0], None).unwrap();
        for bad in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(matches!(
                srop_from_spectrum(&s, bad),
                Err(Error::InvalidParameter(_))
            ));
        }
    }

    #[test]
    fn power_scale_squares_magnitudes() {
        let x = [1.0, 3.0, -2.0, 0.5, 4.0, -1.0];
        let mag = direct_dft_magnitudes(&x);
        let s = power_spectrum_1d_with(&x, None, SpectrumScale::Power).unwrap();
        let total: f64 = mag.iter().map(|m| m * m).sum();
        for (k, m) in mag.iter().enumerate() {
            assert!((s.values()[k] - m * m / total).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn spectra_sum_to_one_and_srop_is_monotone(
            x in proptest::collection::vec(-10.0f64..10.0, 2..200),
            k1 in 0.01f64..1.0,
            k2 in 0.01f64..1.0,
        ) {
            proptest::prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
            let s = power_spectrum_1d(&x, None).unwrap();
            let sum: f64 = s.values().iter().sum();
            proptest::prop_assert!((sum - 1.0).abs() < 1e-9);
            let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
            let a = srop_from_spectrum(&s, lo).unwrap();
            let b = srop_from_spectrum(&s, hi).unwrap();
            proptest::prop_assert!(a.bin <= b.bin);
            proptest::prop_assert!((0.0..=1.0).contains(&a.normalized));
        }
    }
}
