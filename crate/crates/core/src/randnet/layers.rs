//! Forward kernels for single layers. All operate on `Tensor3` volumes.

use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Output columns processed per im2col chunk; bounds scratch memory to
/// `fan_in * COL_CHUNK` floats.
const COL_CHUNK: usize = 4096;

fn out_size(n: usize, k: usize, s: usize, p: usize) -> Result<usize> {
    if n + 2 * p < k || s == 0 {
        return Err(Error::InvalidInput(format!(
            "window {k} / stride {s} does not fit input {n} with padding {p}"
        )));
    }
    Ok((n + 2 * p - k) / s + 1)
}

/// Zero-padded cross-correlation. `weights` is `c_out x c_in x k x k`, row-major.
pub fn conv2d(
    x: &Tensor3,
    weights: &[f32],
    c_out: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Result<Tensor3> {
    let c_in = x.channels;
    let fan_in = c_in * k * k;
    if weights.len() != c_out * fan_in {
        return Err(Error::InvalidInput(format!(
            "conv expects {} weights for {c_in} -> {c_out} channels, got {}",
            c_out * fan_in,
            weights.len()
        )));
    }
    let n = x.size;
    let m = out_size(n, k, stride, pad)?;
    let cols = m * m;
    let mut out = Tensor3::zeros(c_out, m);
    let mut col = vec![0.0f32; fan_in * COL_CHUNK.min(cols)];
    let mut p0 = 0;
    while p0 < cols {
        let width = COL_CHUNK.min(cols - p0);
        // im2col for output positions p0..p0 + width, row stride `width`
        for ci in 0..c_in {
            let plane = x.channel(ci);
            for ky in 0..k {
                for kx in 0..k {
                    let row = (ci * k + ky) * k + kx;
                    let dst = &mut col[row * width..(row + 1) * width];
                    for (j, d) in dst.iter_mut().enumerate() {
                        let p = p0 + j;
                        let (oy, ox) = (p / m, p % m);
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        *d = if iy >= 0 && ix >= 0 && (iy as usize) < n && (ix as usize) < n {
                            plane[iy as usize * n + ix as usize]
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
        // out[:, p0..p0+width] = W (c_out x fan_in) * col (fan_in x width)
        unsafe {
            matrixmultiply::sgemm(
                c_out,
                fan_in,
                width,
                1.0,
                weights.as_ptr(),
                fan_in as isize,
                1,
                col.as_ptr(),
                width as isize,
                1,
                0.0,
                out.data.as_mut_ptr().add(p0),
                cols as isize,
                1,
            );
        }
        p0 += width;
    }
    Ok(out)
}

fn window_reduce(
    x: &Tensor3,
    k: usize,
    stride: usize,
    pad: usize,
    reduce: impl Fn(&mut dyn Iterator<Item = Option<f32>>) -> f32,
) -> Result<Tensor3> {
    let n = x.size;
    let m = out_size(n, k, stride, pad)?;
    let mut out = Tensor3::zeros(x.channels, m);
    for c in 0..x.channels {
        let src = x.channel(c);
        let dst = out.channel_mut(c);
        for oy in 0..m {
            for ox in 0..m {
                let mut cells = (0..k * k).map(|t| {
                    let iy = (oy * stride + t / k) as isize - pad as isize;
                    let ix = (ox * stride + t % k) as isize - pad as isize;
                    (iy >= 0 && ix >= 0 && (iy as usize) < n && (ix as usize) < n)
                        .then(|| src[iy as usize * n + ix as usize])
                });
                dst[oy * m + ox] = reduce(&mut cells);
            }
        }
    }
    Ok(out)
}

/// Window maximum; padded cells never win.
pub fn maxpool(x: &Tensor3, k: usize, stride: usize, pad: usize) -> Result<Tensor3> {
    window_reduce(x, k, stride, pad, |cells| {
        cells.flatten().fold(f32::NEG_INFINITY, f32::max)
    })
}

/// Window mean; padded cells count as zeros.
pub fn avgpool(x: &Tensor3, k: usize, stride: usize, pad: usize) -> Result<Tensor3> {
    let area = (k * k) as f32;
    window_reduce(x, k, stride, pad, |cells| {
        cells.map(|v| v.unwrap_or(0.0)).sum::<f32>() / area
    })
}

/// Stride-2 separable `[1, 2, 1] / 4` blur with one pixel of reflection padding.
pub fn blur_downsample(x: &Tensor3) -> Result<Tensor3> {
    let n = x.size;
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "blur needs at least 2x2, got {n}x{n}"
        )));
    }
    let m = super::arch::blur_out(n);
    let reflect = |i: isize| -> usize {
        if i < 0 {
            (-i) as usize
        } else if i as usize >= n {
            2 * (n - 1) - i as usize
        } else {
            i as usize
        }
    };
    let taps = [0.25f32, 0.5, 0.25];
    let mut out = Tensor3::zeros(x.channels, m);
    let mut rows = vec![0.0f32; m * n];
    for c in 0..x.channels {
        let src = x.channel(c);
        // vertical pass: output rows, all columns
        for oy in 0..m {
            for (t, w) in taps.iter().enumerate() {
                let iy = reflect((2 * oy + t) as isize - 1);
                let line = &src[iy * n..(iy + 1) * n];
                let acc = &mut rows[oy * n..(oy + 1) * n];
                if t == 0 {
                    acc.iter_mut().zip(line).for_each(|(a, v)| *a = w * v);
                } else {
                    acc.iter_mut().zip(line).for_each(|(a, v)| *a += w * v);
                }
            }
        }
        let dst = out.channel_mut(c);
        for oy in 0..m {
            let line = &rows[oy * n..(oy + 1) * n];
            for ox in 0..m {
                dst[oy * m + ox] = taps
                    .iter()
                    .enumerate()
                    .map(|(t, w)| w * line[reflect((2 * ox + t) as isize - 1)])
                    .sum();
            }
        }
    }
    Ok(out)
}

/// Anti-aliased pooling: optional stride-1 dense max, then the stride-2 blur.
pub fn blurpool(x: &Tensor3, pool_kernel: Option<usize>, pad: usize) -> Result<Tensor3> {
    match pool_kernel {
        Some(k) => blur_downsample(&maxpool(x, k, 1, pad)?),
        None => blur_downsample(x),
    }
}

pub fn relu_inplace(x: &mut Tensor3) {
    x.data.iter_mut().for_each(|v| *v = v.max(0.0));
}

pub fn add(inputs: &[&Tensor3]) -> Result<Tensor3> {
    let first = inputs[0];
    if inputs
        .iter()
        .any(|t| t.channels != first.channels || t.size != first.size)
    {
        return Err(Error::InvalidInput("add operands differ in shape".into()));
    }
    let mut out = first.clone();
    for t in &inputs[1..] {
        out.data.iter_mut().zip(&t.data).for_each(|(a, b)| *a += b);
    }
    Ok(out)
}

pub fn concat(inputs: &[&Tensor3]) -> Result<Tensor3> {
    let size = inputs[0].size;
    if inputs.iter().any(|t| t.size != size) {
        return Err(Error::InvalidInput("concat operands differ in size".into()));
    }
    let channels = inputs.iter().map(|t| t.channels).sum();
    let mut data = Vec::with_capacity(channels * size * size);
    for t in inputs {
        data.extend_from_slice(&t.data);
    }
    Tensor3::new(channels, size, data)
}

pub fn global_avgpool(x: &Tensor3) -> Tensor3 {
    let p = x.plane_len() as f32;
    let data = (0..x.channels)
        .map(|c| x.channel(c).iter().sum::<f32>() / p)
        .collect();
    Tensor3 {
        channels: x.channels,
        size: 1,
        data,
    }
}
