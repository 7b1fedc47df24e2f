//! Report emission (CSV tables, SVG heatmaps) and CLI command plumbing.
//!
//! A report bundle is a directory holding `means.csv`, `dist.csv`,
//! `angles.csv`, `variability.csv`, `compression.csv`, `margins.csv`,
//! `margins_meta.csv`, `nc.csv`, and one SVG heatmap per matrix. Heatmaps
//! and CSVs are rendered from the same in-memory matrix.

pub mod commands;
pub mod csv;
pub mod svg;
pub mod synth;

pub use commands::{
    cmd_analyze, cmd_compare, cmd_etf_angle, cmd_fst3d, cmd_ingest, cmd_synth, AnalyzeOptions,
};
pub use synth::{synth_dataset, SynthKind, SynthSpec};
