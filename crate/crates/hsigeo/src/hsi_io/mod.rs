//! Array I/O and labeled feature-set assembly.
//!
//! A [`LabeledCube`] pairs an H×W×B reflectance cube with an H×W ground-truth
//! map (label 0 means "unlabeled", c ≥ 1 means class c). Feature sets carry
//! one f64 row per labeled sample with labels remapped to contiguous ids;
//! the original class ids are kept for reporting. All arithmetic is f64
//! regardless of the on-disk dtype.

pub mod npy;

use ndarray::{Array2, Array3, ArrayView2};
use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use npy::{decode_array, encode_array, load_array, save_array, Dtype, Tensor, TensorData};

/// Labeled feature vectors: an n×p matrix with one class id per row.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_ids: Vec<i64>,
    normalized: bool,
}

impl FeatureSet {
    /// Build a feature set from rows and raw (non-negative) labels. Labels
    /// are remapped to 0..m-1 preserving the ascending order of the distinct
    /// raw values; every class is guaranteed non-empty by construction.
    pub fn from_rows(features: Array2<f64>, raw_labels: &[i64]) -> Result<FeatureSet> {
        if features.nrows() != raw_labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                raw_labels.len()
            )));
        }
        if raw_labels.is_empty() {
            return Err(Error::EmptyInput("feature set has no rows".into()));
        }
        if let Some(&bad) = raw_labels.iter().find(|&&l| l < 0) {
            return Err(Error::Format(format!("negative label value {bad}")));
        }
        let mut remap = BTreeMap::new();
        for &l in raw_labels {
            let next = remap.len();
            remap.entry(l).or_insert(next);
        }
        // BTreeMap iteration is ascending; reassign ids in that order.
        let class_ids: Vec<i64> = remap.keys().copied().collect();
        let ordered: BTreeMap<i64, usize> = class_ids
            .iter()
            .enumerate()
            .map(|(id, &raw)| (raw, id))
            .collect();
        let labels = raw_labels.iter().map(|l| ordered[l]).collect();
        Ok(FeatureSet {
            features,
            labels,
            class_ids,
            normalized: false,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    /// Number of classes m.
    pub fn class_count(&self) -> usize {
        self.class_ids.len()
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    /// Contiguous class ids in [0, m), one per row.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Original class ids, indexed by contiguous id.
    pub fn class_ids(&self) -> &[i64] {
        &self.class_ids
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Maximum Euclidean row norm.
    pub fn max_row_norm(&self) -> f64 {
        self.features
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .fold(0.0f64, f64::max)
    }

    /// Mark a set whose rows already satisfy the normalization invariant
    /// (max row norm 1 within 1e-12) without touching the data.
    pub fn into_normalized(mut self) -> Result<FeatureSet> {
        let max = self.max_row_norm();
        if (max - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateInput(format!(
                "feature set is not normalized: max row norm {max}"
            )));
        }
        self.normalized = true;
        Ok(self)
    }

    /// Rows of one class gathered into a dense matrix.
    pub fn class_rows(&self, class: usize) -> Array2<f64> {
        let idx: Vec<usize> = self
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        let mut out = Array2::zeros((idx.len(), self.p()));
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).assign(&self.features.row(i));
        }
        out
    }

    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Hyperspectral cube plus its ground-truth label map.
#[derive(Debug, Clone)]
pub struct LabeledCube {
    cube: Array3<f64>,
    labels: Array2<i64>,
}

impl LabeledCube {
    pub fn new(cube: Array3<f64>, labels: Array2<i64>) -> Result<LabeledCube> {
        let (h, w, _) = cube.dim();
        if labels.dim() != (h, w) {
            return Err(Error::ShapeMismatch(format!(
                "cube spatial dims {:?} do not match label dims {:?}",
                (h, w),
                labels.dim()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l < 0) {
            return Err(Error::Format(format!("negative label value {bad}")));
        }
        if labels.iter().all(|&l| l == 0) {
            return Err(Error::EmptyInput("no labeled pixels".into()));
        }
        Ok(LabeledCube { cube, labels })
    }

    pub fn from_tensors(cube: &Tensor, labels: &Tensor) -> Result<LabeledCube> {
        let cube = cube.to_array3_f64()?;
        let flat = labels.to_i64_vec()?;
        if labels.shape().len() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "label map must be 2-d, got shape {:?}",
                labels.shape()
            )));
        }
        let lab = Array2::from_shape_vec((labels.shape()[0], labels.shape()[1]), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        LabeledCube::new(cube, lab)
    }

    pub fn cube(&self) -> &Array3<f64> {
        &self.cube
    }

    pub fn labels(&self) -> &Array2<i64> {
        &self.labels
    }

    /// Labeled pixels in row-major scan order: (row, col, raw label).
    pub fn labeled_pixels(&self) -> Vec<(usize, usize, i64)> {
        let (h, w) = self.labels.dim();
        let mut out = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let l = self.labels[(r, c)];
                if l != 0 {
                    out.push((r, c, l));
                }
            }
        }
        out
    }
}

/// One feature row per labeled pixel, the row being the pixel's raw band
/// vector. Rows follow row-major pixel scan order.
pub fn flatten_labeled_pixels(cube: &LabeledCube) -> Result<FeatureSet> {
    let pixels = cube.labeled_pixels();
    if pixels.is_empty() {
        return Err(Error::EmptyInput("no labeled pixels".into()));
    }
    let bands = cube.cube().dim().2;
    let mut features = Array2::zeros((pixels.len(), bands));
    let mut raw_labels = Vec::with_capacity(pixels.len());
    for (row, &(r, c, l)) in pixels.iter().enumerate() {
        for b in 0..bands {
            features[(row, b)] = cube.cube()[(r, c, b)];
        }
        raw_labels.push(l);
    }
    FeatureSet::from_rows(features, &raw_labels)
}

/// Pair an externally produced n×p feature matrix with a length-n label
/// vector (ingestion path for features computed by other tools).
pub fn assemble_feature_set(features: &Tensor, labels: &Tensor) -> Result<FeatureSet> {
    let features = features.to_array2_f64()?;
    if labels.shape().len() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "labels must be 1-d, got shape {:?}",
            labels.shape()
        )));
    }
    let raw = labels.to_i64_vec()?;
    FeatureSet::from_rows(features, &raw)
}

/// Divide every row by the maximum Euclidean row norm, so all features lie
/// in the unit ball and the largest lands on its boundary.
pub fn normalize_max_norm(mut fs: FeatureSet) -> Result<FeatureSet> {
    let max_norm = fs
        .features
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0f64, f64::max);
    if max_norm <= 0.0 {
        return Err(Error::DegenerateInput(
            "all feature vectors are zero; max-norm normalization is undefined".into(),
        ));
    }
    fs.features.mapv_inplace(|x| x / max_norm);
    fs.normalized = true;
    Ok(fs)
}
