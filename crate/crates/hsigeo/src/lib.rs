//! Feature-space geometry toolkit for hyperspectral images.
//!
//! The crate extracts 3-D Fourier scattering features from hyperspectral
//! cubes and measures the geometry of any labeled feature matrix: distances
//! and angles between class means, within-class variability, low-rank
//! compression curves, pairwise maximum margins, and simplex-ETF collapse
//! statistics. A CLI (`hsigeo`) orchestrates the pipeline and renders CSV
//! tables plus SVG heatmaps.
//!
//! Modules mirror the pipeline stages:
//! - [`hsi_io`]: NPY array containers, labeled feature sets, max-norm
//!   normalization.
//! - [`fst3d`]: three-stage 3-D Fourier scattering transform.
//! - [`geometry`]: class means, distance/angle matrices, variability,
//!   compression curves.
//! - [`margins`]: pairwise linear separability and maximum margins.
//! - [`neural_collapse`]: simplex-ETF references and collapse reports.
//! - [`cli_report`]: CSV/SVG emission and CLI command implementations.

pub mod cli_report;
pub mod error;
pub mod fst3d;
pub mod geometry;
pub mod hsi_io;
pub mod margins;
pub mod neural_collapse;

pub use error::{Error, Result};
