//! `hsigeo`: feature-space geometry toolkit for hyperspectral images.
//!
//! Exit codes: 0 on success, 1 on data or processing errors, 2 on usage
//! errors. Diagnostics go to stderr; machine-readable results go to files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hsigeo::cli_report::{self, AnalyzeOptions, SynthKind, SynthSpec};

#[derive(Parser)]
#[command(
    name = "hsigeo",
    version,
    about = "3-D Fourier scattering features and class-geometry reports for hyperspectral data"
)]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for synthetic data generation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory the command writes its outputs into.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct IngestSource {
    /// Hyperspectral cube (H x W x B) as NPY.
    #[arg(long)]
    cube: Option<PathBuf>,

    /// Externally produced feature matrix (n x p) as NPY.
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Etf,
    Isotropic,
    Ellipsoid,
}

impl From<KindArg> for SynthKind {
    fn from(k: KindArg) -> SynthKind {
        match k {
            KindArg::Etf => SynthKind::Etf,
            KindArg::Isotropic => SynthKind::Isotropic,
            KindArg::Ellipsoid => SynthKind::Ellipsoid,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble and max-norm-normalize a labeled feature set.
    Ingest {
        #[command(flatten)]
        source: IngestSource,

        /// Ground-truth labels: H x W map for cubes, length-n vector for
        /// feature matrices.
        #[arg(long)]
        labels: PathBuf,
    },

    /// Extract 3-D Fourier scattering features from a labeled cube.
    Fst3d {
        #[arg(long)]
        cube: PathBuf,

        #[arg(long)]
        labels: PathBuf,

        /// JSON transform configuration; defaults fit cubes whose band
        /// count is at least 12 and divisible by 4.
        #[arg(long)]
        config: Option<PathBuf>,

        /// Output feature matrix (NPY).
        #[arg(long)]
        out: PathBuf,

        /// Output per-row labels (NPY).
        #[arg(long)]
        labels_out: PathBuf,
    },

    /// Run the geometry suite and write a report bundle.
    Analyze {
        #[arg(long)]
        features: PathBuf,

        #[arg(long)]
        labels: PathBuf,

        /// Skip the pairwise margin computation.
        #[arg(long)]
        skip_margins: bool,

        /// Comma-separated hyperplane dimensions for compression curves.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,

        /// Weight the class-averaged compression curve by class sizes.
        #[arg(long)]
        weighted_average: bool,
    },

    /// Subtract one bundle's matrices from another's (other minus base).
    Compare {
        #[arg(long)]
        base: PathBuf,

        #[arg(long)]
        other: PathBuf,
    },

    /// Generate a synthetic labeled feature set.
    Synth {
        #[arg(long, value_enum)]
        kind: KindArg,

        /// Number of classes.
        #[arg(long)]
        m: usize,

        /// Feature dimension.
        #[arg(long)]
        p: usize,

        /// Samples per class.
        #[arg(long)]
        count: usize,

        /// Noise scale (0 collapses every class onto its center).
        #[arg(long)]
        noise: f64,

        /// Center scale.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },

    /// Print the simplex-ETF reference angle for a class count.
    EtfAngle {
        /// Number of classes m.
        #[arg(long)]
        classes: usize,
    },
}

enum Failure {
    Usage(String),
    Run(hsigeo::Error),
}

impl From<hsigeo::Error> for Failure {
    fn from(e: hsigeo::Error) -> Failure {
        Failure::Run(e)
    }
}

fn require_out_dir(out_dir: &Option<PathBuf>, command: &str) -> Result<PathBuf, Failure> {
    out_dir.clone().ok_or_else(|| {
        Failure::Usage(format!("{command} requires --out-dir <DIR>"))
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Cmd::Ingest { source, labels } => {
            let out = require_out_dir(&cli.out_dir, "ingest")?;
            cli_report::cmd_ingest(
                source.cube.as_deref(),
                source.features.as_deref(),
                &labels,
                &out,
            )?;
        }
        Cmd::Fst3d {
            cube,
            labels,
            config,
            out,
            labels_out,
        } => {
            cli_report::cmd_fst3d(&cube, &labels, config.as_deref(), &out, &labels_out)?;
        }
        Cmd::Analyze {
            features,
            labels,
            skip_margins,
            dims,
            weighted_average,
        } => {
            let out = require_out_dir(&cli.out_dir, "analyze")?;
            let opts = AnalyzeOptions {
                skip_margins,
                dims,
                weighted_average,
            };
            cli_report::cmd_analyze(&features, &labels, &out, &opts)?;
        }
        Cmd::Compare { base, other } => {
            let out = require_out_dir(&cli.out_dir, "compare")?;
            cli_report::cmd_compare(&base, &other, &out)?;
        }
        Cmd::Synth {
            kind,
            m,
            p,
            count,
            noise,
            scale,
        } => {
            let out = require_out_dir(&cli.out_dir, "synth")?;
            let spec = SynthSpec {
                kind: kind.into(),
                classes: m,
                dim: p,
                per_class: count,
                noise,
                scale,
                seed: cli.seed,
            };
            cli_report::cmd_synth(&spec, &out)?;
        }
        Cmd::EtfAngle { classes } => {
            cli_report::cmd_etf_angle(classes)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore failure: the global pool may already exist in test harnesses.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
