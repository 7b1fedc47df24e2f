//! Pairwise linear separability and maximum margins.
//!
//! The hard-margin problem is solved geometrically: the maximum margin
//! between two linearly separable point sets equals half the minimum
//! distance between their convex hulls, and the optimal hyperplane is the
//! perpendicular bisector of the closest-points segment. The solver runs a
//! dual coordinate-wise ascent over convex-combination weights with
//! Gilbert-style hull updates (pairwise Frank-Wolfe steps on the Minkowski
//! difference polytope), which yields both a margin bracket and a clean
//! non-separability certificate. Each pair is rescaled to unit max-norm
//! internally so the separability threshold of 1e-9 is scale-free; reported
//! margins are in the caller's units.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{MatrixKind, SymMatrixReport};
use crate::hsi_io::FeatureSet;

/// Hull distance below which (after pair normalization) two classes are
/// declared non-separable.
const SEPARABILITY_GAP: f64 = 1e-9;

/// Absolute duality-gap floor; on unit-scaled data this is dot-product
/// rounding noise, so iterating below it cannot improve the solution.
const GAP_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct MarginConfig {
    /// Relative duality-gap bound on the squared hull distance.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Soft-margin penalty for the auxiliary classification mode
    /// ([`soft_margin_hyperplane`]); hard-margin reports never use it.
    pub soft_c: f64,
}

impl Default for MarginConfig {
    fn default() -> Self {
        MarginConfig {
            tolerance: 1e-10,
            max_iter: 100_000,
            soft_c: 1000.0,
        }
    }
}

impl MarginConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-4) {
            return Err(Error::Config(format!(
                "margin tolerance must lie in (0, 1e-4], got {}",
                self.tolerance
            )));
        }
        if self.soft_c <= 0.0 {
            return Err(Error::Config(format!(
                "soft-margin penalty must be positive, got {}",
                self.soft_c
            )));
        }
        Ok(())
    }
}

/// Outcome of one hard-margin computation.
#[derive(Debug, Clone)]
pub struct MarginResult {
    pub separable: bool,
    /// Distance from the optimal hyperplane to the nearest point; present
    /// iff the pair is separable.
    pub margin: Option<f64>,
    pub normal: Option<Array1<f64>>,
    pub offset: Option<f64>,
    pub support_a: Vec<usize>,
    pub support_b: Vec<usize>,
    pub iterations: usize,
    /// Certified bracket on the hull distance, in the caller's units.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StopMode {
    /// Stop as soon as the separability question is certified either way.
    Decide,
    /// Run to the duality-gap tolerance (unless non-separability is certified).
    Optimize,
}

struct SolveOutcome {
    separable: bool,
    weights: Vec<(usize, usize, f64)>,
    iterations: usize,
    lower: f64,
    upper: f64,
    converged: bool,
}

/// Pairwise Frank-Wolfe on conv{a_i - b_j}: find the minimum-norm point of
/// the hull difference. Inputs must already be scaled to unit max-norm.
fn solve_hull_gap(
    a: &Array2<f64>,
    b: &Array2<f64>,
    tolerance: f64,
    max_iter: usize,
    mode: StopMode,
) -> SolveOutcome {
    let dot_row = |m: &Array2<f64>, i: usize, w: &Array1<f64>| m.row(i).dot(w);

    // Active difference vertices (i, j, weight); weights stay on the simplex.
    let mut active: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0)];
    let recompute_w = |active: &[(usize, usize, f64)]| -> Array1<f64> {
        let mut w = Array1::<f64>::zeros(a.ncols());
        for &(i, j, g) in active {
            w += &(&a.row(i) - &b.row(j)).mapv(|x| x * g);
        }
        w
    };
    let mut w = recompute_w(&active);

    let mut lower_best = 0.0f64;
    let mut upper_best = f64::INFINITY;
    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let w2 = w.dot(&w);
        let upper = w2.sqrt();
        upper_best = upper_best.min(upper);
        if upper <= SEPARABILITY_GAP {
            // The hulls (nearly) intersect: certified non-separable.
            return SolveOutcome {
                separable: false,
                weights: active,
                iterations,
                lower: lower_best.min(upper),
                upper: upper_best,
                converged: true,
            };
        }

        // Frank-Wolfe vertex of the difference polytope.
        let mut i_fw = 0;
        let mut a_min = dot_row(a, 0, &w);
        for i in 1..a.nrows() {
            let v = dot_row(a, i, &w);
            if v < a_min {
                a_min = v;
                i_fw = i;
            }
        }
        let mut j_fw = 0;
        let mut b_max = dot_row(b, 0, &w);
        for j in 1..b.nrows() {
            let v = dot_row(b, j, &w);
            if v > b_max {
                b_max = v;
                j_fw = j;
            }
        }
        let support = a_min - b_max;
        let lower = (support / upper).max(0.0);
        lower_best = lower_best.max(lower);

        if mode == StopMode::Decide && lower_best > SEPARABILITY_GAP {
            return SolveOutcome {
                separable: true,
                weights: active,
                iterations,
                lower: lower_best,
                upper: upper_best,
                converged: true,
            };
        }

        let gap = w2 - support;
        if gap <= tolerance * w2 + GAP_FLOOR {
            converged = true;
            break;
        }

        // Away vertex: the active difference vertex most aligned with w.
        let mut k_away = 0;
        let mut away_val = f64::NEG_INFINITY;
        for (k, &(i, j, _)) in active.iter().enumerate() {
            let v = dot_row(a, i, &w) - dot_row(b, j, &w);
            if v > away_val {
                away_val = v;
                k_away = k;
            }
        }
        let (ai, aj, away_weight) = active[k_away];
        let dir = (&a.row(i_fw) - &b.row(j_fw)) - (&a.row(ai) - &b.row(aj));
        let denom = dir.dot(&dir);
        if denom <= 0.0 {
            // FW and away vertices coincide: nothing can move.
            converged = true;
            break;
        }
        let step = (-(w.dot(&dir)) / denom).clamp(0.0, away_weight);
        if step == 0.0 {
            converged = true;
            break;
        }
        w += &dir.mapv(|x| x * step);
        if step >= away_weight {
            active.swap_remove(k_away);
        } else {
            active[k_away].2 -= step;
        }
        match active.iter_mut().find(|(i, j, _)| *i == i_fw && *j == j_fw) {
            Some(entry) => entry.2 += step,
            None => active.push((i_fw, j_fw, step)),
        }
        // Rebuild w from the weights periodically to cancel drift.
        if iterations % 128 == 0 {
            w = recompute_w(&active);
        }
    }

    w = recompute_w(&active);
    let dist = w.dot(&w).sqrt();
    upper_best = upper_best.min(dist);
    SolveOutcome {
        separable: dist > SEPARABILITY_GAP,
        weights: active,
        iterations,
        lower: lower_best.min(upper_best),
        upper: upper_best,
        converged,
    }
}

fn max_row_norm(x: &ArrayView2<f64>) -> f64 {
    x.rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt())
        .fold(0.0, f64::max)
}

fn run_solver(
    xi: &ArrayView2<f64>,
    xj: &ArrayView2<f64>,
    cfg: &MarginConfig,
    mode: StopMode,
) -> Result<(SolveOutcome, f64)> {
    assert!(
        xi.nrows() > 0 && xj.nrows() > 0,
        "margin computation needs non-empty point sets"
    );
    cfg.validate()?;
    let scale = max_row_norm(xi).max(max_row_norm(xj));
    if scale <= 0.0 {
        // Both hulls are the origin: they intersect.
        return Ok((
            SolveOutcome {
                separable: false,
                weights: vec![(0, 0, 1.0)],
                iterations: 0,
                lower: 0.0,
                upper: 0.0,
                converged: true,
            },
            1.0,
        ));
    }
    let a = xi.mapv(|x| x / scale);
    let b = xj.mapv(|x| x / scale);
    let out = solve_hull_gap(&a, &b, cfg.tolerance, cfg.max_iter, mode);
    Ok((out, scale))
}

/// True iff the convex hulls of the two point sets are disjoint (hull
/// distance above 1e-9 after scaling the pair to unit max-norm).
pub fn separability_check(xi: ArrayView2<f64>, xj: ArrayView2<f64>) -> bool {
    let cfg = MarginConfig::default();
    let (out, _) = run_solver(&xi, &xj, &cfg, StopMode::Decide)
        .expect("default margin config is valid");
    out.separable
}

/// Maximum-margin hyperplane between two point sets. If the pair is
/// separable the margin is half the hull distance and the hyperplane is the
/// perpendicular bisector of the closest-points segment.
pub fn max_margin(
    xi: ArrayView2<f64>,
    xj: ArrayView2<f64>,
    cfg: &MarginConfig,
) -> Result<MarginResult> {
    max_margin_for_pair(xi, xj, cfg, (-1, -1))
}

fn max_margin_for_pair(
    xi: ArrayView2<f64>,
    xj: ArrayView2<f64>,
    cfg: &MarginConfig,
    pair_ids: (i64, i64),
) -> Result<MarginResult> {
    let (out, scale) = run_solver(&xi, &xj, cfg, StopMode::Optimize)?;
    if !out.converged {
        return Err(Error::MarginConvergence {
            class_a: pair_ids.0,
            class_b: pair_ids.1,
            iterations: out.iterations,
            lower: out.lower * scale,
            upper: out.upper * scale,
        });
    }

    let mut support_a: Vec<usize> = Vec::new();
    let mut support_b: Vec<usize> = Vec::new();
    for &(i, j, g) in &out.weights {
        if g > 1e-12 {
            if !support_a.contains(&i) {
                support_a.push(i);
            }
            if !support_b.contains(&j) {
                support_b.push(j);
            }
        }
    }
    support_a.sort_unstable();
    support_b.sort_unstable();

    if !out.separable {
        return Ok(MarginResult {
            separable: false,
            margin: None,
            normal: None,
            offset: None,
            support_a,
            support_b,
            iterations: out.iterations,
            lower: out.lower * scale,
            upper: out.upper * scale,
        });
    }

    // Closest hull points in original units.
    let p = xi.ncols();
    let mut u = Array1::<f64>::zeros(p);
    let mut v = Array1::<f64>::zeros(p);
    for &(i, j, g) in &out.weights {
        u += &xi.row(i).mapv(|x| x * g);
        v += &xj.row(j).mapv(|x| x * g);
    }
    let w = &u - &v;
    let dist = w.dot(&w).sqrt();
    let normal = w.mapv(|x| x / dist);
    let mid = (&u + &v).mapv(|x| 0.5 * x);
    let offset = -normal.dot(&mid);

    Ok(MarginResult {
        separable: true,
        margin: Some(dist / 2.0),
        normal: Some(normal),
        offset: Some(offset),
        support_a,
        support_b,
        iterations: out.iterations,
        lower: out.lower * scale,
        upper: out.upper * scale,
    })
}

/// Per-pair solver diagnostics for the margins side table.
#[derive(Debug, Clone)]
pub struct PairMargin {
    pub class_a: i64,
    pub class_b: i64,
    pub separable: bool,
    pub margin: Option<f64>,
    pub iterations: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Maximum margins for every unordered class pair; non-separable pairs stay
/// absent in the report. Pairs run in parallel and land in disjoint cells,
/// so results are independent of scheduling.
pub fn pairwise_margins(
    fs: &FeatureSet,
    cfg: &MarginConfig,
) -> Result<(SymMatrixReport, Vec<PairMargin>)> {
    let m = fs.class_count();
    if m < 2 {
        return Err(Error::DegenerateInput(
            "pairwise margins need at least two classes".into(),
        ));
    }
    cfg.validate()?;
    let class_mats: Vec<Array2<f64>> = (0..m).map(|c| fs.class_rows(c)).collect();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
        .collect();

    let results: Result<Vec<(usize, usize, MarginResult)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let ids = (fs.class_ids()[i], fs.class_ids()[j]);
            let r = max_margin_for_pair(class_mats[i].view(), class_mats[j].view(), cfg, ids)?;
            Ok((i, j, r))
        })
        .collect();
    let results = results?;

    let mut values = vec![None; m * m];
    let mut meta = Vec::with_capacity(results.len());
    for (i, j, r) in results {
        values[i * m + j] = r.margin;
        values[j * m + i] = r.margin;
        meta.push(PairMargin {
            class_a: fs.class_ids()[i],
            class_b: fs.class_ids()[j],
            separable: r.separable,
            margin: r.margin,
            iterations: r.iterations,
            lower: r.lower,
            upper: r.upper,
        });
    }
    let report = SymMatrixReport::from_cells(MatrixKind::Margin, fs.class_ids().to_vec(), values)?;
    Ok((report, meta))
}

/// Auxiliary soft-margin linear SVM (dual coordinate descent with the bias
/// folded in as an extra feature). Returns (normal, offset) of the decision
/// hyperplane; positive side is `xi`. Kept for classification-style use;
/// the hard-margin reports never call it.
pub fn soft_margin_hyperplane(
    xi: ArrayView2<f64>,
    xj: ArrayView2<f64>,
    cfg: &MarginConfig,
) -> Result<(Array1<f64>, f64)> {
    cfg.validate()?;
    let p = xi.ncols();
    let n = xi.nrows() + xj.nrows();
    if xi.nrows() == 0 || xj.nrows() == 0 {
        return Err(Error::EmptyInput("soft-margin SVM needs both classes".into()));
    }

    // Augmented rows (x, 1) with labels +1 for xi, -1 for xj.
    let mut x = Array2::<f64>::zeros((n, p + 1));
    let mut y = vec![0.0f64; n];
    for (r, row) in xi.rows().into_iter().enumerate() {
        x.row_mut(r).slice_mut(ndarray::s![..p]).assign(&row);
        x[(r, p)] = 1.0;
        y[r] = 1.0;
    }
    for (r, row) in xj.rows().into_iter().enumerate() {
        let r = r + xi.nrows();
        x.row_mut(r).slice_mut(ndarray::s![..p]).assign(&row);
        x[(r, p)] = 1.0;
        y[r] = -1.0;
    }

    let diag: Vec<f64> = x.rows().into_iter().map(|r| r.dot(&r)).collect();
    let mut alpha = vec![0.0f64; n];
    let mut w = Array1::<f64>::zeros(p + 1);
    let c = cfg.soft_c;
    for _pass in 0..1000 {
        let mut max_violation = 0.0f64;
        for k in 0..n {
            if diag[k] <= 0.0 {
                continue;
            }
            let g = y[k] * x.row(k).dot(&w) - 1.0;
            let pg = if alpha[k] <= 0.0 {
                g.min(0.0)
            } else if alpha[k] >= c {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[k];
                alpha[k] = (old - g / diag[k]).clamp(0.0, c);
                let delta = (alpha[k] - old) * y[k];
                if delta != 0.0 {
                    w += &x.row(k).mapv(|v| v * delta);
                }
            }
        }
        if max_violation < 1e-9 {
            break;
        }
    }
    let normal = w.slice(ndarray::s![..p]).to_owned();
    let offset = w[p];
    Ok((normal, offset))
}
