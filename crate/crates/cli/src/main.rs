mod commands;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Spectral roll-off points of signals, images and CNN feature maps.
#[derive(Debug, Parser)]
#[command(name = "sropkit", version)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Energy fraction defining the roll-off point, in (0, 1].
    #[arg(long, global = true, default_value_t = sropkit::spectral::DEFAULT_KAPPA)]
    pub kappa: f64,
    /// Seed for random weights and frog selection.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: current directory].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output formats; repeatable [default: csv].
    #[arg(long = "format", global = true, value_enum)]
    pub formats: Vec<Format>,
    /// Start the analysed band at bin 1 instead of DC.
    #[arg(long, global = true)]
    pub exclude_dc: bool,
    /// Accumulate |F|^2 instead of |F|.
    #[arg(long, global = true)]
    pub power_spectrum: bool,
    /// Reduce RGB inputs to luminance before analysis.
    #[arg(long, global = true)]
    pub luminance: bool,
    /// Normalize map SROPs to their own band rather than the network input's.
    #[arg(long, global = true)]
    pub band_reference: bool,
    /// Standardize RGB inputs with the ImageNet channel statistics.
    #[arg(long, global = true)]
    pub imagenet_norm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SROP of a 1-D series (text of numbers or a 1-D .npy).
    Srop1d {
        file: PathBuf,
        /// Analysed band as `lo:hi` bins [default: 0:len/2].
        #[arg(long)]
        band: Option<String>,
    },
    /// SROP of every image (and channel) in an .npy array.
    Sropimg { npy: PathBuf },
    /// Per-channel SROPs and statistics of a (C, n, n) or (N, C, n, n) feature map.
    Sroptensor {
        npy: PathBuf,
        /// Layer name used in the report.
        #[arg(long, default_value = "tensor")]
        name: String,
    },
    /// Layer-wise SROP table of the activation dumps listed in a manifest.
    Profile { manifest: PathBuf },
    /// Benchmark max-pool ladder over a directory of .npy images.
    Baseline { image_dir: PathBuf },
    /// Randomized-network profile. CONFIG is a JSON file or a shipped name.
    Randnet {
        config: String,
        image_dir: PathBuf,
        /// Use only the first N images.
        #[arg(long)]
        limit: Option<usize>,
        /// Also dump tap activations as NPY plus manifest into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Frog + digit blend dataset (CASE_I or CASE_II).
    Synth {
        mode: String,
        w: f32,
        /// MNIST image file (IDX, optionally gzipped).
        #[arg(long)]
        mnist_images: PathBuf,
        /// MNIST label file (IDX, optionally gzipped).
        #[arg(long)]
        mnist_labels: PathBuf,
        /// CIFAR-10 binary batch supplying the frog.
        #[arg(long)]
        cifar: PathBuf,
    },
    /// Kernel density of SROP values stored in an .npy array.
    ///
    /// A 2-D (samples, kernels) array is reduced to one mean per sample; NaN
    /// entries are treated as missing.
    Kde {
        npy: PathBuf,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Use every value of a 2-D array instead of per-sample means.
        #[arg(long)]
        pooled: bool,
    },
    /// Re-run the invocation recorded in a run.json sidecar.
    Replay { run: PathBuf },
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<sropkit::Error>() {
            return if err.is_validation() { 2 } else { 1 };
        }
        if cause.is::<serde_json::Error>() {
            return 2;
        }
    }
    1
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SROPKIT_THREADS") {
        let n: usize = v.parse().map_err(|_| {
            sropkit::Error::InvalidParameter(format!("SROPKIT_THREADS must be a positive integer, got `{v}`"))
        })?;
        if n == 0 {
            return Err(sropkit::Error::InvalidParameter("SROPKIT_THREADS must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = init_threads().and_then(|_| commands::run(cli, argv));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
