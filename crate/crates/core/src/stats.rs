//! Layer-wise SROP statistics, density estimates and depth profiles.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of the per-kernel SROPs of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SropReport {
    pub layer_name: String,
    pub resolution: usize,
    pub kernel_srops: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub std: f64,
    /// Channels excluded because they carried no spectral energy.
    pub skipped_channels: usize,
}

/// Builds a report from per-kernel values, `None` marking skipped channels.
///
/// Quartiles interpolate linearly between order statistics and `std` is the
/// population standard deviation. All statistics are computed from the sorted
/// values, so they do not depend on the input order.
pub fn layer_stats(srops: &[Option<f64>], layer_name: &str, resolution: usize) -> Result<SropReport> {
    let kernel_srops: Vec<f64> = srops.iter().flatten().copied().collect();
    let skipped_channels = srops.len() - kernel_srops.len();
    if kernel_srops.is_empty() {
        return Err(Error::EmptyLayer(layer_name.to_string()));
    }
    if kernel_srops.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "layer `{layer_name}` has non-finite SROP values"
        )));
    }
    let mut sorted = kernel_srops.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let lo = sorted[0];
    let hi = sorted[sorted.len() - 1];
    let mean = (sorted.iter().sum::<f64>() / n).clamp(lo, hi);
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(SropReport {
        layer_name: layer_name.to_string(),
        resolution,
        mean,
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
        std: var.sqrt(),
        kernel_srops,
        skipped_channels,
    })
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    let frac = h - i as f64;
    if i + 1 >= sorted.len() {
        sorted[i]
    } else {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    }
}

/// Gaussian kernel density over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurve {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// Grid positions of the local maxima of `density`.
    pub peaks: Vec<f64>,
}

impl KdeCurve {
    /// Trapezoidal integral of the density over the grid.
    pub fn mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(g, d)| (g[1] - g[0]) * (d[0] + d[1]) / 2.0)
            .sum()
    }
}

/// Silverman's rule of thumb, `1.06 * sigma * n^(-1/5)` with the sample deviation.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// Density estimate of `values` evaluated on `grid_points` uniform points of `[0, 1]`.
///
/// Kernel mass falling outside `[0, 1]` is reflected back at the boundaries so the
/// density integrates to one over the support.
pub fn kde_estimate(values: &[f64], grid_points: usize) -> Result<KdeCurve> {
    if grid_points < 16 {
        return Err(Error::InvalidParameter(format!(
            "need at least 16 grid points, got {grid_points}"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample value".into()));
    }
    let distinct: HashSet<u64> = values.iter().map(|v| v.to_bits()).collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateSample);
    }
    let bandwidth = silverman_bandwidth(values);
    let norm = 1.0 / (values.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| i as f64 / (grid_points - 1) as f64)
        .collect();
    let kernel = |d: f64| (-0.5 * (d / bandwidth).powi(2)).exp();
    let density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| kernel(x - v) + kernel(x + v) + kernel(x - (2.0 - v)))
                .sum::<f64>()
                * norm
        })
        .collect();
    let peaks = local_maxima(&density).into_iter().map(|i| grid[i]).collect();
    Ok(KdeCurve {
        grid,
        density,
        bandwidth,
        peaks,
    })
}

/// Indices of local maxima, ignoring bumps below 1e-3 of the global maximum.
fn local_maxima(d: &[f64]) -> Vec<usize> {
    let top = d.iter().cloned().fold(0.0, f64::max);
    let floor = top * 1e-3;
    let mut out = Vec::new();
    let mut i = 0;
    while i < d.len() {
        // treat runs of equal values as one candidate
        let mut j = i;
        while j + 1 < d.len() && d[j + 1] == d[i] {
            j += 1;
        }
        let left_lower = i == 0 || d[i - 1] < d[i];
        let right_lower = j + 1 == d.len() || d[j + 1] < d[j];
        if left_lower && right_lower && d[i] > floor && d.len() > 1 {
            out.push((i + j) / 2);
        }
        i = j + 1;
    }
    out
}

/// One row of a depth profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub layer: String,
    pub resolution: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub std: f64,
    /// Natural log of `mean`; `-inf` when every SROP is 0, written to JSON as text.
    #[serde(with = "lossless_f64")]
    pub log_mean: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    pub rows: Vec<ProfileRow>,
}

pub const CSV_HEADER: &str = "layer,resolution,mean,median,q1,q3,std,log_mean,skipped";

/// Depth-ordered table of layer statistics.
pub fn profile_series(reports: &[SropReport]) -> Result<ProfileTable> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no layer reports".into()));
    }
    let mut seen = HashSet::new();
    for r in reports {
        if !seen.insert(r.layer_name.as_str()) {
            return Err(Error::InvalidInput(format!(
                "duplicate layer name `{}`",
                r.layer_name
            )));
        }
    }
    let rows = reports
        .iter()
        .map(|r| ProfileRow {
            layer: r.layer_name.clone(),
            resolution: r.resolution,
            mean: r.mean,
            median: r.median,
            q1: r.q1,
            q3: r.q3,
            std: r.std,
            log_mean: r.mean.ln(),
            skipped: r.skipped_channels,
        })
        .collect();
    Ok(ProfileTable { rows })
}

impl ProfileTable {
    /// CSV with LF line endings; floats use the shortest exact representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_field(&r.layer),
                r.resolution,
                r.mean,
                r.median,
                r.q1,
                r.q3,
                r.std,
                r.log_mean,
                r.skipped
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end_matches('\r') == CSV_HEADER => {}
            _ => return Err(Error::InvalidInput("missing profile CSV header".into())),
        }
        let bad = |line: &str| Error::InvalidInput(format!("malformed profile row `{line}`"));
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let (layer, rest) = split_layer(line).ok_or_else(|| bad(line))?;
            let f: Vec<&str> = rest.split(',').collect();
            if f.len() != 8 {
                return Err(bad(line));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
            rows.push(ProfileRow {
                layer,
                resolution: f[0].parse().map_err(|_| bad(line))?,
                mean: num(f[1])?,
                median: num(f[2])?,
                q1: num(f[3])?,
                q3: num(f[4])?,
                std: num(f[5])?,
                log_mean: num(f[6])?,
                skipped: f[7].parse().map_err(|_| bad(line))?,
            });
        }
        Ok(Self { rows })
    }
}

mod lossless_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Splits off the (possibly quoted) first field.
fn split_layer(line: &str) -> Option<(String, &str)> {
    if let Some(body) = line.strip_prefix('"') {
        let mut out = String::new();
        let mut chars = body.char_indices().peekable();
        while let Some((i, ch)) = chars.next() {
            if ch == '"' {
                if let Some((_, '"')) = chars.peek() {
                    out.push('"');
                    chars.next();
                } else {
                    return body[i + 1..].strip_prefix(',').map(|rest| (out, rest));
                }
            } else {
                out.push(ch);
            }
        }
        None
    } else {
        line.split_once(',').map(|(a, b)| (a.to_string(), b))
    }
}
