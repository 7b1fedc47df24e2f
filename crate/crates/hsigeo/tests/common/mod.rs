//! Independent oracles and helpers shared by the integration suites.
//!
//! Everything here reimplements the checked quantities from scratch (naive
//! DFTs, direct-space convolutions, exhaustive enumeration) so the main
//! code paths are validated against genuinely independent computations.

#![allow(dead_code)]

use ndarray::{Array2, Array3};

use hsigeo::fst3d::{FstConfig, PathRule, C64};

// ---------------------------------------------------------------------------
// Margin oracle: exact minimum distance between convex hulls by enumerating
// support subsets of the Minkowski-difference vertex set.
// ---------------------------------------------------------------------------

/// Exact hull distance via brute force. Enumerates every subset of the
/// difference vertices {a_i - b_j} up to size p+1, solves the min-norm
/// point on each subset's affine hull, and keeps candidates that are convex
/// combinations. Exponential and only fit for tiny instances.
pub fn hull_distance_oracle(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let p = a.ncols();
    let mut diffs: Vec<Vec<f64>> = Vec::new();
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            diffs.push((0..p).map(|d| a[(i, d)] - b[(j, d)]).collect());
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut best = diffs.iter().map(|v| norm(v)).fold(f64::INFINITY, f64::min);

    let n = diffs.len();
    let max_size = (p + 1).min(n);
    let mut subset: Vec<usize> = Vec::new();
    enumerate_subsets(n, max_size, &mut subset, &mut |s| {
        if s.len() < 2 {
            return;
        }
        if let Some(d) = min_norm_on_simplex(&diffs, s) {
            if d < best {
                best = d;
            }
        }
    });
    best
}

fn enumerate_subsets(
    n: usize,
    max_size: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    let start = current.last().map_or(0, |&l| l + 1);
    for i in start..n {
        current.push(i);
        visit(current);
        if current.len() < max_size {
            enumerate_subsets(n, max_size, current, visit);
        }
        current.pop();
    }
}

/// Min-norm point of the affine hull of the chosen vertices; `None` if the
/// system is (near-)singular or the point leaves the simplex.
fn min_norm_on_simplex(points: &[Vec<f64>], subset: &[usize]) -> Option<f64> {
    let k = subset.len();
    // KKT system: [G 1; 1^T 0] [mu; lambda] = [0; 1] with G the Gram matrix.
    let dim = k + 1;
    let mut m = vec![vec![0.0f64; dim + 1]; dim];
    for (r, &ir) in subset.iter().enumerate() {
        for (c, &ic) in subset.iter().enumerate() {
            m[r][c] = dot(&points[ir], &points[ic]);
        }
        m[r][k] = 1.0;
        m[r][dim] = 0.0;
    }
    for c in 0..k {
        m[k][c] = 1.0;
    }
    m[k][k] = 0.0;
    m[k][dim] = 1.0;

    let mu = solve_dense(&mut m)?;
    if mu[..k].iter().any(|&x| x < -1e-9) {
        return None;
    }
    let mut w = vec![0.0f64; points[0].len()];
    for (r, &ir) in subset.iter().enumerate() {
        for (d, wd) in w.iter_mut().enumerate() {
            *wd += mu[r] * points[ir][d];
        }
    }
    Some(w.iter().map(|x| x * x).sum::<f64>().sqrt())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(m: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = m.len();
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter().take(n))
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if pivot_val < 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot_row);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        let sub = f * m[col][c];
                        m[r][c] -= sub;
                    }
                }
            }
        }
    }
    Some((0..n).map(|r| m[r][n] / m[r][r]).collect())
}

// ---------------------------------------------------------------------------
// Scattering oracle: the full cascade rebuilt with naive DFTs and
// direct-space circular convolutions.
// ---------------------------------------------------------------------------

pub struct DirectScattering {
    cfg: FstConfig,
    stages: [OracleStage; 3],
}

struct OracleStage {
    grid: [usize; 3],
    lowpass: Array3<f64>,
    band: Vec<Array3<C64>>,
}

impl DirectScattering {
    pub fn new(cfg: &FstConfig) -> DirectScattering {
        let grids = [
            stage_grid(cfg, 0),
            stage_grid(cfg, 1),
            stage_grid(cfg, 2),
        ];
        let stages = [0, 1, 2].map(|s| build_oracle_stage(cfg, grids[s], s));
        DirectScattering {
            cfg: cfg.clone(),
            stages,
        }
    }

    /// Coefficients in the same path order the library uses.
    pub fn coefficients(&self, patch: &Array3<f64>) -> Vec<f64> {
        let d = [
            self.cfg.stages[0].downsample,
            self.cfg.stages[1].downsample,
            self.cfg.stages[2].downsample,
        ];
        let mut order0 = Vec::new();
        let mut order1 = Vec::new();
        let mut order2 = Vec::new();

        let lp0 = conv_real(patch, &self.stages[0].lowpass);
        order0.push(mean(&down(&lp0, d[0])));

        let n1 = self.stages[0].band.len();
        let n2 = self.stages[1].band.len();
        for ia in 0..n1 {
            let u1 = down(&conv_modulus(patch, &self.stages[0].band[ia]), d[0]);
            let lp1 = conv_real(&u1, &self.stages[1].lowpass);
            order1.push(mean(&down(&lp1, d[1])));
            for ib in 0..n2 {
                if self.cfg.paths == PathRule::Ordered && ib <= ia {
                    continue;
                }
                let u2 = down(&conv_modulus(&u1, &self.stages[1].band[ib]), d[1]);
                let lp2 = conv_real(&u2, &self.stages[2].lowpass);
                order2.push(mean(&down(&lp2, d[2])));
            }
        }
        let mut out = order0;
        out.extend(order1);
        out.extend(order2);
        out
    }
}

fn stage_grid(cfg: &FstConfig, stage: usize) -> [usize; 3] {
    let mut g = cfg.patch_shape;
    for st in &cfg.stages[..stage] {
        for d in 0..3 {
            g[d] /= st.downsample[d];
        }
    }
    g
}

fn build_oracle_stage(cfg: &FstConfig, grid: [usize; 3], stage: usize) -> OracleStage {
    let st = &cfg.stages[stage];
    // Real window, embedded at the origin with wraparound.
    let mut window = Array3::<f64>::zeros((grid[0], grid[1], grid[2]));
    let half = [
        (st.window[0] as isize - 1) / 2,
        (st.window[1] as isize - 1) / 2,
        (st.window[2] as isize - 1) / 2,
    ];
    let sigma = [
        st.window[0] as f64 / 6.0,
        st.window[1] as f64 / 6.0,
        st.window[2] as f64 / 6.0,
    ];
    for u in -half[0]..=half[0] {
        for v in -half[1]..=half[1] {
            for t in -half[2]..=half[2] {
                let g = (-(u * u) as f64 / (2.0 * sigma[0] * sigma[0])
                    - (v * v) as f64 / (2.0 * sigma[1] * sigma[1])
                    - (t * t) as f64 / (2.0 * sigma[2] * sigma[2]))
                    .exp();
                window[(
                    u.rem_euclid(grid[0] as isize) as usize,
                    v.rem_euclid(grid[1] as isize) as usize,
                    t.rem_euclid(grid[2] as isize) as usize,
                )] = g;
            }
        }
    }

    // Littlewood-Paley normalization from a naive DFT of the window.
    let spectrum = naive_dft(&window);
    let power: Array3<f64> = spectrum.map(|z| z.norm_sqr());
    let lattice: Vec<[i32; 3]> = st
        .lattice
        .iter()
        .copied()
        .filter(|&k| k != [0, 0, 0])
        .collect();
    let mut max_lp = 0.0f64;
    let (n0, n1, n2) = power.dim();
    for w0 in 0..n0 {
        for w1 in 0..n1 {
            for w2 in 0..n2 {
                let mut acc = power[(w0, w1, w2)];
                for &k in &lattice {
                    acc += power[shifted_index((w0, w1, w2), k, (n0, n1, n2))];
                    acc += power[shifted_index(
                        (w0, w1, w2),
                        [-k[0], -k[1], -k[2]],
                        (n0, n1, n2),
                    )];
                }
                max_lp = max_lp.max(acc);
            }
        }
    }
    let scale = (1.0 - 1e-13) / max_lp.sqrt();

    let lowpass = window.mapv(|x| x * scale);
    let band = lattice
        .iter()
        .map(|&k| {
            Array3::from_shape_fn((grid[0], grid[1], grid[2]), |(i, j, l)| {
                let phase = 2.0
                    * std::f64::consts::PI
                    * (k[0] as f64 * i as f64 / grid[0] as f64
                        + k[1] as f64 * j as f64 / grid[1] as f64
                        + k[2] as f64 * l as f64 / grid[2] as f64);
                C64::new(phase.cos(), phase.sin()) * window[(i, j, l)] * scale
            })
        })
        .collect();
    OracleStage {
        grid,
        lowpass,
        band,
    }
}

fn shifted_index(
    w: (usize, usize, usize),
    k: [i32; 3],
    n: (usize, usize, usize),
) -> (usize, usize, usize) {
    (
        (w.0 as i64 - k[0] as i64).rem_euclid(n.0 as i64) as usize,
        (w.1 as i64 - k[1] as i64).rem_euclid(n.1 as i64) as usize,
        (w.2 as i64 - k[2] as i64).rem_euclid(n.2 as i64) as usize,
    )
}

fn naive_dft(x: &Array3<f64>) -> Array3<C64> {
    let (n0, n1, n2) = x.dim();
    Array3::from_shape_fn((n0, n1, n2), |(w0, w1, w2)| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n0 {
            for j in 0..n1 {
                for l in 0..n2 {
                    let phase = -2.0
                        * std::f64::consts::PI
                        * (w0 as f64 * i as f64 / n0 as f64
                            + w1 as f64 * j as f64 / n1 as f64
                            + w2 as f64 * l as f64 / n2 as f64);
                    acc += C64::new(phase.cos(), phase.sin()) * x[(i, j, l)];
                }
            }
        }
        acc
    })
}

fn conv_real(x: &Array3<f64>, kernel: &Array3<f64>) -> Array3<f64> {
    let (n0, n1, n2) = x.dim();
    Array3::from_shape_fn((n0, n1, n2), |(o0, o1, o2)| {
        let mut acc = 0.0;
        for i in 0..n0 {
            for j in 0..n1 {
                for l in 0..n2 {
                    acc += x[(i, j, l)]
                        * kernel[((o0 + n0 - i) % n0, (o1 + n1 - j) % n1, (o2 + n2 - l) % n2)];
                }
            }
        }
        acc
    })
}

fn conv_modulus(x: &Array3<f64>, kernel: &Array3<C64>) -> Array3<f64> {
    let (n0, n1, n2) = x.dim();
    Array3::from_shape_fn((n0, n1, n2), |(o0, o1, o2)| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n0 {
            for j in 0..n1 {
                for l in 0..n2 {
                    acc += kernel
                        [((o0 + n0 - i) % n0, (o1 + n1 - j) % n1, (o2 + n2 - l) % n2)]
                        * x[(i, j, l)];
                }
            }
        }
        acc.norm()
    })
}

fn down(x: &Array3<f64>, f: [usize; 3]) -> Array3<f64> {
    if f == [1, 1, 1] {
        x.clone()
    } else {
        x.slice(ndarray::s![..;f[0], ..;f[1], ..;f[2]]).to_owned()
    }
}

fn mean(x: &Array3<f64>) -> f64 {
    x.sum() / x.len() as f64
}

// ---------------------------------------------------------------------------
// CSV parsing helpers for report bundles written by the CLI.
// ---------------------------------------------------------------------------

pub fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect()
}

/// Column value from a single-data-row CSV (header + one row).
pub fn csv_single_row_value(text: &str, column: &str) -> f64 {
    let rows = csv_rows(text);
    let idx = rows[0]
        .iter()
        .position(|c| c == column)
        .unwrap_or_else(|| panic!("no column {column}"));
    rows[1][idx].parse().expect("numeric cell")
}

/// Value tagged by the first cell of a row ("mean", "std", ...).
pub fn csv_tagged_value(text: &str, tag: &str) -> f64 {
    for row in csv_rows(text) {
        if row[0] == tag {
            return row[1].parse().expect("numeric cell");
        }
    }
    panic!("no row tagged {tag}");
}
