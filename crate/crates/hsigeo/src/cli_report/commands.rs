//! CLI command implementations.
//!
//! Commands load NPY arrays, drive the analysis modules, and write report
//! bundles. Result tables land in files; the only stdout output is a short
//! `n=.. p=.. m=..` summary where a command produces a feature set, and the
//! ETF angle for `etf-angle`. Warnings go to stderr.

use std::fs;
use std::path::Path;

use super::{csv, svg, synth::SynthSpec};
use crate::error::{Error, Result};
use crate::fst3d::{scatter_cube, FstConfig};
use crate::geometry::{
    class_means, class_variability, compression_curve, delta_matrix, mean_angle_matrix,
    mean_distance_matrix, ClassWeighting, MatrixKind, SymMatrixReport,
};
use crate::hsi_io::{
    assemble_feature_set, flatten_labeled_pixels, load_array, normalize_max_norm, save_array,
    FeatureSet, LabeledCube, Tensor, TensorData,
};
use crate::margins::{pairwise_margins, MarginConfig};
use crate::neural_collapse::{etf_angle_degrees, nc_report};

fn feature_tensor(fs: &FeatureSet) -> Result<Tensor> {
    Tensor::from_f64(
        vec![fs.n(), fs.p()],
        fs.features().iter().copied().collect(),
    )
}

fn label_tensor(fs: &FeatureSet) -> Result<Tensor> {
    let ids: Result<Vec<i32>> = fs
        .labels()
        .iter()
        .map(|&l| {
            let raw = fs.class_ids()[l];
            i32::try_from(raw)
                .map_err(|_| Error::Format(format!("class id {raw} exceeds the i32 range")))
        })
        .collect();
    Tensor::new(vec![fs.n()], TensorData::I32(ids?))
}

fn write_feature_set(fs: &FeatureSet, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    save_array(&feature_tensor(fs)?, out_dir.join("features.npy"))?;
    save_array(&label_tensor(fs)?, out_dir.join("labels.npy"))?;
    Ok(())
}

fn print_summary(fs: &FeatureSet) {
    println!("n={} p={} m={}", fs.n(), fs.p(), fs.class_count());
}

/// Build a normalized feature set from a cube/label pair or an external
/// feature matrix, and write it as `features.npy` + `labels.npy`.
pub fn cmd_ingest(
    cube: Option<&Path>,
    features: Option<&Path>,
    labels: &Path,
    out_dir: &Path,
) -> Result<()> {
    let labels_t = load_array(labels)?;
    let fs = match (cube, features) {
        (Some(cube_path), None) => {
            let cube_t = load_array(cube_path)?;
            let lc = LabeledCube::from_tensors(&cube_t, &labels_t)?;
            flatten_labeled_pixels(&lc)?
        }
        (None, Some(features_path)) => {
            let features_t = load_array(features_path)?;
            assemble_feature_set(&features_t, &labels_t)?
        }
        _ => {
            return Err(Error::Config(
                "ingest needs exactly one of --cube or --features".into(),
            ))
        }
    };
    let fs = normalize_max_norm(fs)?;
    write_feature_set(&fs, out_dir)?;
    print_summary(&fs);
    Ok(())
}

/// Run the scattering transform over a labeled cube and write the raw
/// (unnormalized) feature matrix plus per-row labels.
pub fn cmd_fst3d(
    cube: &Path,
    labels: &Path,
    config: Option<&Path>,
    out: &Path,
    labels_out: &Path,
) -> Result<()> {
    let cube_t = load_array(cube)?;
    let labels_t = load_array(labels)?;
    let lc = LabeledCube::from_tensors(&cube_t, &labels_t)?;
    let cfg = match config {
        Some(path) => FstConfig::from_json(&fs::read_to_string(path)?)?,
        None => FstConfig::default_for_bands(lc.cube().dim().2),
    };
    let scattered = scatter_cube(&lc, &cfg)?;
    let fs = scattered.feature_set;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    save_array(&feature_tensor(&fs)?, out)?;
    save_array(&label_tensor(&fs)?, labels_out)?;
    print_summary(&fs);
    Ok(())
}

/// Options for [`cmd_analyze`].
#[derive(Debug, Clone, Default)]
pub struct AnalyzeOptions {
    pub skip_margins: bool,
    /// Hyperplane dimensions for the compression curves; defaults to up to
    /// 65 evenly spaced values covering 0..=p.
    pub dims: Option<Vec<usize>>,
    pub weighted_average: bool,
}

fn default_dims(p: usize) -> Vec<usize> {
    if p <= 64 {
        (0..=p).collect()
    } else {
        let mut dims: Vec<usize> = (0..=64).map(|i| i * p / 64).collect();
        dims.dedup();
        dims
    }
}

/// Run the geometry suite over a stored feature set and write the report
/// bundle (CSV tables plus SVG heatmaps).
pub fn cmd_analyze(
    features: &Path,
    labels: &Path,
    out_dir: &Path,
    opts: &AnalyzeOptions,
) -> Result<()> {
    let features_t = load_array(features).map_err(|e| e.at_stage("load"))?;
    let labels_t = load_array(labels).map_err(|e| e.at_stage("load"))?;
    let fs = assemble_feature_set(&features_t, &labels_t).map_err(|e| e.at_stage("assemble"))?;

    let max_norm = fs.max_row_norm();
    let fs = if (max_norm - 1.0).abs() <= 1e-12 {
        fs.into_normalized().map_err(|e| e.at_stage("normalize"))?
    } else {
        eprintln!(
            "warning: features are not max-norm normalized (max row norm {max_norm}); \
             renormalizing"
        );
        normalize_max_norm(fs).map_err(|e| e.at_stage("normalize"))?
    };

    fs::create_dir_all(out_dir)?;
    let cm = class_means(&fs);
    fs::write(out_dir.join("means.csv"), csv::means_csv(&cm))?;

    let dist = mean_distance_matrix(&cm).map_err(|e| e.at_stage("distances"))?;
    write_matrix(out_dir, "dist", &dist)?;

    let angles = mean_angle_matrix(&cm).map_err(|e| e.at_stage("angles"))?;
    write_matrix(out_dir, "angles", &angles)?;

    let variability = class_variability(&fs, &cm);
    fs::write(
        out_dir.join("variability.csv"),
        csv::variability_csv(&variability, fs.class_ids()),
    )?;

    let dims = opts.dims.clone().unwrap_or_else(|| default_dims(fs.p()));
    let weighting = if opts.weighted_average {
        ClassWeighting::Counts
    } else {
        ClassWeighting::Uniform
    };
    let curves =
        compression_curve(&fs, &dims, weighting).map_err(|e| e.at_stage("compression"))?;
    fs::write(out_dir.join("compression.csv"), csv::compression_csv(&curves))?;

    if !opts.skip_margins {
        let (margins, meta) = pairwise_margins(&fs, &MarginConfig::default())
            .map_err(|e| e.at_stage("margins"))?;
        write_matrix(out_dir, "margins", &margins)?;
        fs::write(out_dir.join("margins_meta.csv"), csv::margins_meta_csv(&meta))?;
    }

    let nc = nc_report(&cm).map_err(|e| e.at_stage("neural-collapse"))?;
    fs::write(out_dir.join("nc.csv"), csv::nc_csv(&nc))?;
    Ok(())
}

fn write_matrix(out_dir: &Path, name: &str, report: &SymMatrixReport) -> Result<()> {
    fs::write(out_dir.join(format!("{name}.csv")), csv::matrix_csv(report))?;
    fs::write(out_dir.join(format!("{name}.svg")), svg::heatmap_svg(report))?;
    Ok(())
}

/// Subtract the base bundle's distance and angle matrices from another
/// bundle's and write delta tables plus heatmaps.
pub fn cmd_compare(base_dir: &Path, other_dir: &Path, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    for (file, kind, out_name) in [
        ("dist.csv", MatrixKind::Distance, "delta_dist"),
        ("angles.csv", MatrixKind::AngleDegrees, "delta_angles"),
    ] {
        let base = csv::parse_matrix_csv(&fs::read_to_string(base_dir.join(file))?, kind)?;
        let other = csv::parse_matrix_csv(&fs::read_to_string(other_dir.join(file))?, kind)?;
        if base.class_ids() != other.class_ids() {
            return Err(Error::Comparison(format!(
                "{file}: class ids differ between bundles: base {:?}, other {:?}",
                base.class_ids(),
                other.class_ids()
            )));
        }
        let delta = delta_matrix(&other, &base)?;
        write_matrix(out_dir, out_name, &delta)?;
    }
    Ok(())
}

/// Generate a synthetic labeled feature set and store it like `ingest`
/// (without normalization, so noise-free ETF fixtures stay bit-exact).
pub fn cmd_synth(spec: &SynthSpec, out_dir: &Path) -> Result<()> {
    let (features, labels) = super::synth::synth_dataset(spec)?;
    let fs = FeatureSet::from_rows(features, &labels)?;
    write_feature_set(&fs, out_dir)?;
    print_summary(&fs);
    Ok(())
}

/// Print the simplex-ETF reference angle for a class count.
pub fn cmd_etf_angle(classes: usize) -> Result<()> {
    println!("{:.4}", etf_angle_degrees(classes)?);
    Ok(())
}
