//! Simplex-ETF reference quantities and collapse statistics.
//!
//! Under neural collapse, recentered class means form the vertices of a
//! (rotated, scaled) simplex equiangular tight frame: m equal-norm, zero-sum
//! vectors whose pairwise cosines all equal -1/(m-1). This module builds
//! exact ETF vertex sets, computes the reference angle for a class count,
//! and summarizes how far a set of class means deviates from that geometry.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, ClassMeans};

/// Collapse comparison for one set of class means. `equinorm_cv` and
/// `equiangular_dev` are supplementary deviation metrics flagged as
/// extensions in CLI output; the distance/angle statistics are taken over
/// the m(m-1)/2 unordered class pairs with population standard deviations.
#[derive(Debug, Clone)]
pub struct NcReport {
    pub m: usize,
    pub etf_angle_degrees: f64,
    pub distance_mean: f64,
    pub distance_std: f64,
    pub angle_mean: f64,
    pub angle_std: f64,
    /// Coefficient of variation (std/mean) of the centered mean norms.
    pub equinorm_cv: f64,
    /// Max absolute deviation of pairwise cosines from their mean.
    pub equiangular_dev: f64,
}

/// The simplex-ETF angle arccos(-1/(m-1)) in degrees.
pub fn etf_angle_degrees(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::DegenerateInput(format!(
            "ETF angle needs at least two classes, got {m}"
        )));
    }
    Ok((-1.0 / (m as f64 - 1.0)).acos().to_degrees())
}

/// m vectors in R^p of norm `scale`, zero sum, and pairwise cosines exactly
/// -1/(m-1): the centered standard basis expressed in an orthonormal basis
/// of its span, then rescaled.
pub fn make_simplex_etf(m: usize, p: usize, scale: f64) -> Result<Array2<f64>> {
    if m < 2 {
        return Err(Error::DegenerateInput(format!(
            "a simplex ETF needs at least two vertices, got {m}"
        )));
    }
    if scale <= 0.0 {
        return Err(Error::Config(format!("ETF scale must be positive, got {scale}")));
    }
    if p < m - 1 {
        return Err(Error::Config(format!(
            "ambient dimension {p} cannot hold a {m}-vertex simplex ETF (need >= {})",
            m - 1
        )));
    }
    // Centered basis vectors v_i = e_i - 1/m live in the hyperplane 1^T x = 0.
    // Gram-Schmidt on v_1..v_{m-1} spans that hyperplane; coordinates of all
    // m vectors in this basis give the ETF in R^{m-1}.
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        let mut v = Array1::from_elem(m, -1.0 / m as f64);
        v[i] += 1.0;
        for q in &basis {
            let c = v.dot(q);
            v -= &(q * c);
        }
        let n = v.dot(&v).sqrt();
        basis.push(v / n);
    }

    let mut out = Array2::zeros((m, p));
    for i in 0..m {
        let mut v = Array1::from_elem(m, -1.0 / m as f64);
        v[i] += 1.0;
        let mut row = out.row_mut(i);
        for (d, q) in basis.iter().enumerate() {
            row[d] = v.dot(q);
        }
        let norm = row.dot(&row).sqrt();
        let f = scale / norm;
        row.mapv_inplace(|x| x * f);
    }
    Ok(out)
}

/// Distance/angle statistics of class means against the ETF reference.
pub fn nc_report(cm: &ClassMeans) -> Result<NcReport> {
    let m = cm.class_count();
    let distances = geometry::mean_distance_matrix(cm)?.upper_values();
    let angles = geometry::mean_angle_matrix(cm)?.upper_values();
    let (distance_mean, distance_std) = population_stats(&distances);
    let (angle_mean, angle_std) = population_stats(&angles);

    let centered: Vec<Array1<f64>> = (0..m).map(|j| cm.centered(j)).collect();
    let norms: Vec<f64> = centered.iter().map(|v| v.dot(v).sqrt()).collect();
    let (norm_mean, norm_std) = population_stats(&norms);
    let equinorm_cv = norm_std / norm_mean;

    let mut cosines = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let denom = (centered[i].dot(&centered[i]) * centered[j].dot(&centered[j])).sqrt();
            cosines.push(centered[i].dot(&centered[j]) / denom);
        }
    }
    let (cos_mean, _) = population_stats(&cosines);
    let equiangular_dev = cosines
        .iter()
        .map(|c| (c - cos_mean).abs())
        .fold(0.0, f64::max);

    Ok(NcReport {
        m,
        etf_angle_degrees: etf_angle_degrees(m)?,
        distance_mean,
        distance_std,
        angle_mean,
        angle_std,
        equinorm_cv,
        equiangular_dev,
    })
}

fn population_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Random orthogonal matrix (QR of a Gaussian sample with positive diagonal
/// fix-up). Used by invariance tests and synthetic fixtures.
pub fn random_orthogonal(p: usize, rng: &mut impl Rng) -> Array2<f64> {
    let g = nalgebra::DMatrix::from_fn(p, p, |_, _| rng.gen_range(-1.0..1.0f64));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Make the factorization unique (and Q a proper sample) by forcing a
    // positive R diagonal.
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            for i in 0..p {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Array2::from_shape_fn((p, p), |(i, j)| q[(i, j)])
}
