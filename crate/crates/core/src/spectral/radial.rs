//! Centred 2-D spectra and their reduction to a radial 1-D profile.
//!
//! The profile sums (not averages) the spectrum over annuli `k <= r < k + 1`
//! around the DC bin for `k = 0..=m` with `m = floor(sqrt(2) (n - 1) / 2) - 1`.
//! Cells beyond radius `m + 1` (the far corners) are dropped. Because the bin of a
//! cell depends only on its distance to DC, rotating an image by multiples of 90
//! degrees leaves the profile unchanged.

use rustfft::num_complex::Complex;

use super::{fft, normalize_srop, rolloff_index, SpectralConfig, Spectrum1D, SpectrumScale, SropValue};
use crate::error::{Error, Result};

/// A DC-centred `n x n` spectrum (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    grid: Vec<f64>,
    n: usize,
}

impl Spectrum2D {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(floor(n/2), floor(n/2))`
    pub fn dc_index(&self) -> (usize, usize) {
        (self.n / 2, self.n / 2)
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.grid[row * self.n + col]
    }
}

fn check_square(len: usize, rows: usize, cols: usize) -> Result<usize> {
    if rows != cols {
        return Err(Error::InvalidInput(format!(
            "image must be square, got {rows}x{cols}"
        )));
    }
    if len != rows * cols {
        return Err(Error::InvalidInput(format!(
            "buffer holds {len} values, expected {rows}x{cols}"
        )));
    }
    if rows < 3 {
        return Err(Error::TooSmall(rows));
    }
    Ok(rows)
}

/// Centred 2-D DFT magnitudes of a square image.
pub fn power_spectrum_2d<T: Copy + Into<f64>>(image: &[T], rows: usize, cols: usize) -> Result<Spectrum2D> {
    power_spectrum_2d_with(image, rows, cols, SpectrumScale::Magnitude)
}

pub fn power_spectrum_2d_with<T: Copy + Into<f64>>(
    image: &[T],
    rows: usize,
    cols: usize,
    scale: SpectrumScale,
) -> Result<Spectrum2D> {
    let n = check_square(image.len(), rows, cols)?;
    let raw = fft::dft_2d(image, n);
    Ok(Spectrum2D {
        grid: shift(&raw, n, scale),
        n,
    })
}

/// Moves the DC term to `(n/2, n/2)` while converting to magnitude or power.
fn shift(raw: &[Complex<f64>], n: usize, scale: SpectrumScale) -> Vec<f64> {
    let half = n / 2;
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        let src_r = (r + n - half) % n;
        for c in 0..n {
            let src_c = (c + n - half) % n;
            let v = raw[src_r * n + src_c];
            out[r * n + c] = scale.apply(v.re, v.im);
        }
    }
    out
}

/// Highest radial bin index `m` for an `n x n` spectrum.
pub fn radial_bin_count(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(Error::TooSmall(n));
    }
    let m = (std::f64::consts::SQRT_2 * (n - 1) as f64 / 2.0).floor() as usize;
    Ok(m - 1)
}

/// Annulus sums before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSums {
    /// `sums[k]` covers radii `k <= r < k + 1`, `k = 0..=m`.
    pub sums: Vec<f64>,
    /// Energy in the corner cells with `r >= m + 1`.
    pub dropped: f64,
}

impl RadialSums {
    pub fn in_disk(&self) -> f64 {
        self.sums.iter().sum()
    }
}

pub fn radial_sums(s: &Spectrum2D) -> Result<RadialSums> {
    let n = s.n;
    let m = radial_bin_count(n)?;
    let c = (n / 2) as i64;
    let mut sums = vec![0.0; m + 1];
    let mut dropped = 0.0;
    for r in 0..n {
        let dr = r as i64 - c;
        let row = &s.grid[r * n..(r + 1) * n];
        for (col, v) in row.iter().enumerate() {
            let dc = col as i64 - c;
            // floor(sqrt(d2)) without floating error
            let k = ((dr * dr + dc * dc) as u64).isqrt() as usize;
            if k <= m {
                sums[k] += v;
            } else {
                dropped += v;
            }
        }
    }
    Ok(RadialSums { sums, dropped })
}

/// Radial profile over the band `(0, m)`, normalized to unit sum.
pub fn radial_profile(s: &Spectrum2D) -> Result<Spectrum1D> {
    Spectrum1D::from_raw(radial_sums(s)?.sums, 0)
}

/// Band-limited radial profile; with `exclude_dc` the band is `(1, m)`.
pub(crate) fn radial_profile_band(s: &Spectrum2D, exclude_dc: bool) -> Result<Spectrum1D> {
    let mut sums = radial_sums(s)?.sums;
    if exclude_dc {
        if sums.len() < 2 {
            return Err(Error::TooSmall(s.n));
        }
        sums.remove(0);
        Spectrum1D::from_raw(sums, 1)
    } else {
        Spectrum1D::from_raw(sums, 0)
    }
}

/// Roll-off point of a square image's radial spectrum profile.
pub fn srop_2d<T: Copy + Into<f64>>(
    image: &[T],
    rows: usize,
    cols: usize,
    config: &SpectralConfig,
) -> Result<SropValue> {
    config.validate()?;
    let spectrum = power_spectrum_2d_with(image, rows, cols, config.scale)?;
    let profile = radial_profile_band(&spectrum, config.exclude_dc)?;
    let idx = rolloff_index(profile.values(), config.kappa).ok_or(Error::ZeroEnergy)?;
    let bin = profile.band_lo() + idx;
    Ok(SropValue {
        bin,
        normalized: normalize_srop(bin, profile.band_lo(), profile.band_hi())?,
        kappa: config.kappa,
    })
}
