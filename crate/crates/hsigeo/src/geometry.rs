//! Class-mean geometry: distance and angle matrices, within-class
//! variability, and low-rank compression curves.
//!
//! Angles are measured after subtracting the center of the class means (the
//! unweighted average of the m means). Compression error for a class is the
//! root-mean-square residual distance to the best k-dimensional hyperplane
//! through the class mean, i.e. the square root of the SVD tail energy
//! divided by the class size.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hsi_io::FeatureSet;

/// What a symmetric class-pair matrix holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Distance,
    AngleDegrees,
    Margin,
    Delta,
}

impl MatrixKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixKind::Distance => "distance",
            MatrixKind::AngleDegrees => "angle_degrees",
            MatrixKind::Margin => "margin",
            MatrixKind::Delta => "delta",
        }
    }
}

/// Symmetric m×m matrix over class pairs. Margin entries may be absent
/// (non-separable pairs); the margin diagonal is always absent.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrixReport {
    kind: MatrixKind,
    class_ids: Vec<i64>,
    values: Vec<Option<f64>>,
}

impl SymMatrixReport {
    pub fn from_cells(
        kind: MatrixKind,
        class_ids: Vec<i64>,
        values: Vec<Option<f64>>,
    ) -> Result<SymMatrixReport> {
        let m = class_ids.len();
        if values.len() != m * m {
            return Err(Error::ShapeMismatch(format!(
                "{m}x{m} report needs {} cells, got {}",
                m * m,
                values.len()
            )));
        }
        let r = SymMatrixReport {
            kind,
            class_ids,
            values,
        };
        for i in 0..m {
            for j in 0..i {
                match (r.get(i, j), r.get(j, i)) {
                    (Some(a), Some(b)) if (a - b).abs() > 1e-9 * a.abs().max(1.0) => {
                        return Err(Error::ShapeMismatch(format!(
                            "asymmetric cells ({i},{j}): {a} vs {b}"
                        )));
                    }
                    (Some(_), None) | (None, Some(_)) => {
                        return Err(Error::ShapeMismatch(format!(
                            "presence mismatch across the diagonal at ({i},{j})"
                        )));
                    }
                    _ => {}
                }
            }
        }
        Ok(r)
    }

    /// Build a full (every entry present) symmetric report from a function
    /// of ordered index pairs.
    pub fn full(
        kind: MatrixKind,
        class_ids: Vec<i64>,
        mut cell: impl FnMut(usize, usize) -> f64,
    ) -> SymMatrixReport {
        let m = class_ids.len();
        let mut values = vec![None; m * m];
        for i in 0..m {
            for j in i..m {
                let v = cell(i, j);
                values[i * m + j] = Some(v);
                values[j * m + i] = Some(v);
            }
        }
        SymMatrixReport {
            kind,
            class_ids,
            values,
        }
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn class_ids(&self) -> &[i64] {
        &self.class_ids
    }

    pub fn size(&self) -> usize {
        self.class_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.size() + j]
    }

    /// Present off-diagonal values from the upper triangle (unordered pairs).
    pub fn upper_values(&self) -> Vec<f64> {
        let m = self.size();
        let mut out = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if let Some(v) = self.get(i, j) {
                    out.push(v);
                }
            }
        }
        out
    }
}

/// Per-class means, sample counts, and the (unweighted) center of means.
#[derive(Debug, Clone)]
pub struct ClassMeans {
    means: Array2<f64>,
    counts: Vec<usize>,
    center: Array1<f64>,
    class_ids: Vec<i64>,
}

impl ClassMeans {
    pub fn from_means(means: Array2<f64>, counts: Vec<usize>, class_ids: Vec<i64>) -> ClassMeans {
        let m = means.nrows() as f64;
        let center = means.sum_axis(ndarray::Axis(0)) / m;
        ClassMeans {
            means,
            counts,
            center,
            class_ids,
        }
    }

    pub fn means(&self) -> &Array2<f64> {
        &self.means
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn center(&self) -> &Array1<f64> {
        &self.center
    }

    pub fn class_ids(&self) -> &[i64] {
        &self.class_ids
    }

    pub fn class_count(&self) -> usize {
        self.means.nrows()
    }

    /// Mean of class `j` shifted by the center of means.
    pub fn centered(&self, j: usize) -> Array1<f64> {
        &self.means.row(j) - &self.center
    }
}

/// Arithmetic mean of each class's rows.
pub fn class_means(fs: &FeatureSet) -> ClassMeans {
    let m = fs.class_count();
    let p = fs.p();
    let mut sums = Array2::<f64>::zeros((m, p));
    let mut counts = vec![0usize; m];
    for (row, &label) in fs.labels().iter().enumerate() {
        counts[label] += 1;
        let mut target = sums.row_mut(label);
        target += &fs.features().row(row);
    }
    for (j, &c) in counts.iter().enumerate() {
        let mut row = sums.row_mut(j);
        row /= c as f64;
    }
    ClassMeans::from_means(sums, counts, fs.class_ids().to_vec())
}

/// Euclidean distances between class means.
pub fn mean_distance_matrix(cm: &ClassMeans) -> Result<SymMatrixReport> {
    let m = cm.class_count();
    if m < 2 {
        return Err(Error::DegenerateInput(
            "distance matrix needs at least two classes".into(),
        ));
    }
    Ok(SymMatrixReport::full(
        MatrixKind::Distance,
        cm.class_ids().to_vec(),
        |i, j| {
            let d = &cm.means().row(i) - &cm.means().row(j);
            d.dot(&d).sqrt()
        },
    ))
}

/// Angles (degrees) between class means after shifting by the center of
/// means. Cosines are clamped to [-1, 1] before arccos.
pub fn mean_angle_matrix(cm: &ClassMeans) -> Result<SymMatrixReport> {
    let m = cm.class_count();
    if m < 2 {
        return Err(Error::DegenerateInput(
            "angle matrix needs at least two classes".into(),
        ));
    }
    let centered: Vec<Array1<f64>> = (0..m).map(|j| cm.centered(j)).collect();
    let norms2: Vec<f64> = centered.iter().map(|v| v.dot(v)).collect();
    for (j, &n2) in norms2.iter().enumerate() {
        if n2.sqrt() <= 1e-12 {
            return Err(Error::DegenerateAngle {
                class_id: cm.class_ids()[j],
            });
        }
    }
    Ok(SymMatrixReport::full(
        MatrixKind::AngleDegrees,
        cm.class_ids().to_vec(),
        |i, j| {
            if i == j {
                return 0.0;
            }
            // sqrt of the product (not a product of sqrts) keeps exactly
            // antipodal pairs at cosine -1.
            let cos = centered[i].dot(&centered[j]) / (norms2[i] * norms2[j]).sqrt();
            cos.clamp(-1.0, 1.0).acos().to_degrees()
        },
    ))
}

/// Per-class average distance to the class mean, with a mean ± population
/// standard deviation summary over classes.
#[derive(Debug, Clone)]
pub struct Variability {
    pub per_class: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Average Euclidean distance between feature vectors and their class mean.
/// Meant to run on max-norm-normalized features so values are comparable
/// across methods.
pub fn class_variability(fs: &FeatureSet, cm: &ClassMeans) -> Variability {
    let m = cm.class_count();
    let mut sums = vec![0.0f64; m];
    for (row, &label) in fs.labels().iter().enumerate() {
        let d = &fs.features().row(row) - &cm.means().row(label);
        sums[label] += d.dot(&d).sqrt();
    }
    let per_class: Vec<f64> = sums
        .iter()
        .zip(cm.counts())
        .map(|(s, &c)| s / c as f64)
        .collect();
    let (mean, std) = population_stats(&per_class);
    Variability {
        per_class,
        mean,
        std,
    }
}

pub(crate) fn population_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// How the class-averaged compression curve weighs classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeighting {
    Uniform,
    Counts,
}

/// Residual error of the best k-dimensional hyperplane fit per class, as a
/// function of k.
#[derive(Debug, Clone)]
pub struct CompressionCurves {
    pub dims: Vec<usize>,
    pub fractions: Vec<f64>,
    pub per_class: Vec<Vec<f64>>,
    pub average: Vec<f64>,
    pub class_ids: Vec<i64>,
}

/// RMS residual of approximating each class by its best k-dim hyperplane
/// through the class mean, evaluated at every k in `dims`.
pub fn compression_curve(
    fs: &FeatureSet,
    dims: &[usize],
    weighting: ClassWeighting,
) -> Result<CompressionCurves> {
    let p = fs.p();
    if let Some(&bad) = dims.iter().find(|&&k| k > p) {
        return Err(Error::Config(format!(
            "hyperplane dimension {bad} exceeds feature dimension {p}"
        )));
    }
    let m = fs.class_count();
    let per_class: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|class| {
            let rows = fs.class_rows(class);
            let n_j = rows.nrows() as f64;
            let mean = rows.sum_axis(ndarray::Axis(0)) / n_j;
            let mut centered = rows;
            for mut r in centered.rows_mut() {
                r -= &mean;
            }
            let svals = singular_values(&centered);
            // Tail sums accumulated from the smallest singular value up.
            let mut tail = vec![0.0f64; svals.len() + 1];
            for i in (0..svals.len()).rev() {
                tail[i] = tail[i + 1] + svals[i] * svals[i];
            }
            dims.iter()
                .map(|&k| {
                    let t = if k < svals.len() { tail[k] } else { 0.0 };
                    (t / n_j).sqrt()
                })
                .collect()
        })
        .collect();

    let weights: Vec<f64> = match weighting {
        ClassWeighting::Uniform => vec![1.0 / m as f64; m],
        ClassWeighting::Counts => {
            let mut counts = vec![0usize; m];
            for &l in fs.labels() {
                counts[l] += 1;
            }
            let total = fs.n() as f64;
            counts.iter().map(|&c| c as f64 / total).collect()
        }
    };
    let average: Vec<f64> = (0..dims.len())
        .map(|d| {
            per_class
                .iter()
                .zip(&weights)
                .map(|(curve, w)| curve[d] * w)
                .sum()
        })
        .collect();

    Ok(CompressionCurves {
        dims: dims.to_vec(),
        fractions: dims.iter().map(|&k| k as f64 / p as f64).collect(),
        per_class,
        average,
        class_ids: fs.class_ids().to_vec(),
    })
}

/// Singular values of a dense matrix, descending.
pub(crate) fn singular_values(a: &Array2<f64>) -> Vec<f64> {
    let (n, p) = a.dim();
    if n == 0 || p == 0 {
        return Vec::new();
    }
    let dm = nalgebra::DMatrix::from_row_iterator(n, p, a.iter().copied());
    let mut sv: Vec<f64> = dm.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

/// Entrywise `a - b`; absent entries stay absent. Both reports must share
/// kind, size, and class-id order.
pub fn delta_matrix(a: &SymMatrixReport, b: &SymMatrixReport) -> Result<SymMatrixReport> {
    if a.kind() != b.kind() {
        return Err(Error::Comparison(format!(
            "kind mismatch: {} vs {}",
            a.kind().as_str(),
            b.kind().as_str()
        )));
    }
    if a.class_ids() != b.class_ids() {
        return Err(Error::Comparison(format!(
            "class ids differ: {:?} vs {:?}",
            a.class_ids(),
            b.class_ids()
        )));
    }
    let m = a.size();
    let mut values = vec![None; m * m];
    for i in 0..m {
        for j in 0..m {
            values[i * m + j] = match (a.get(i, j), b.get(i, j)) {
                (Some(x), Some(y)) => Some(x - y),
                _ => None,
            };
        }
    }
    SymMatrixReport::from_cells(MatrixKind::Delta, a.class_ids().to_vec(), values)
}
