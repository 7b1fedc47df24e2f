//! Three-stage 3-D Fourier scattering transform.
//!
//! Each stage convolves against a bank of time-frequency-shifted atoms
//! (circular FFT convolution), takes the complex modulus, and downsamples.
//! Final coefficients are the spatial means of the low-pass outputs at each
//! order: one zeroth-order value (which keeps the sign of the local
//! average), one first-order value per stage-1 frequency, and one
//! second-order value per retained frequency pair. With the ordered path
//! rule a pair (a, b) is retained only when b's lattice rank exceeds a's.

mod bank;
mod fft;

pub use bank::{build_filter_bank, generate_lattice, FilterBank3D};
pub use fft::{Fft3, C64};

use ndarray::{s, Array2, Array3, ArrayView3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsi_io::{FeatureSet, LabeledCube};

/// Second-order path retention rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathRule {
    /// Keep (a, b) only when rank(b) > rank(a) in the stage lattices.
    Ordered,
    /// Keep every pair.
    All,
}

/// One scattering stage: filter extents, modulation lattice, downsampling.
#[derive(Debug, Clone)]
pub struct StageConfig {
    pub window: [usize; 3],
    pub lattice: Vec<[i32; 3]>,
    pub downsample: [usize; 3],
}

/// Full transform configuration. The stage count is fixed at three.
#[derive(Debug, Clone)]
pub struct FstConfig {
    /// Per-pixel neighborhood (height, width, bands).
    pub patch_shape: [usize; 3],
    pub stages: [StageConfig; 3],
    pub paths: PathRule,
}

impl FstConfig {
    /// Stand-in defaults sized like the grid-searched filters the transform
    /// is normally run with: patch 9 x 9 x bands, windows 7/5/3, frequency
    /// boxes 2/2/1, spectral downsampling 2x at the first two stages.
    /// Requires `bands >= 12` and `bands` divisible by 4.
    pub fn default_for_bands(bands: usize) -> FstConfig {
        FstConfig {
            patch_shape: [9, 9, bands],
            stages: [
                StageConfig {
                    window: [7, 7, 7],
                    lattice: generate_lattice([2, 2, 2]),
                    downsample: [1, 1, 2],
                },
                StageConfig {
                    window: [5, 5, 5],
                    lattice: generate_lattice([2, 2, 2]),
                    downsample: [1, 1, 2],
                },
                StageConfig {
                    window: [3, 3, 3],
                    lattice: generate_lattice([1, 1, 1]),
                    downsample: [1, 1, 1],
                },
            ],
            paths: PathRule::Ordered,
        }
    }

    /// Grid the given stage operates on: the patch shape divided by the
    /// downsampling factors of earlier stages.
    pub fn stage_grid(&self, stage: usize) -> Result<[usize; 3]> {
        let mut grid = self.patch_shape;
        for st in &self.stages[..stage] {
            for d in 0..3 {
                if st.downsample[d] == 0 || grid[d] % st.downsample[d] != 0 {
                    return Err(Error::Config(format!(
                        "downsample factors {:?} do not divide the stage grid {:?}",
                        st.downsample, grid
                    )));
                }
                grid[d] /= st.downsample[d];
            }
        }
        Ok(grid)
    }

    /// Grid remaining after the last stage's downsampling.
    pub fn final_grid(&self) -> Result<[usize; 3]> {
        let g = self.stage_grid(2)?;
        let d = self.stages[2].downsample;
        let mut out = [0usize; 3];
        for i in 0..3 {
            if d[i] == 0 || g[i] % d[i] != 0 {
                return Err(Error::Config(format!(
                    "downsample factors {d:?} do not divide the stage grid {g:?}"
                )));
            }
            out[i] = g[i] / d[i];
        }
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.patch_shape.iter().any(|&d| d == 0) {
            return Err(Error::Config("patch extents must be positive".into()));
        }
        self.final_grid()?;
        for stage in 0..3 {
            let grid = self.stage_grid(stage)?;
            let st = &self.stages[stage];
            for d in 0..3 {
                if st.window[d] % 2 == 0 || st.window[d] == 0 {
                    return Err(Error::Config(format!(
                        "stage {stage} filter extents must be odd, got {:?}",
                        st.window
                    )));
                }
                if st.window[d] > grid[d] {
                    return Err(Error::Config(format!(
                        "stage {stage} filter extents {:?} exceed the stage grid {grid:?}",
                        st.window
                    )));
                }
            }
            bank::validate_lattice(&st.lattice, grid)?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<FstConfig> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("bad FST config: {e}")))?;
        if file.stages.len() != 3 {
            return Err(Error::Config(format!(
                "the transform has exactly 3 stages, config lists {}",
                file.stages.len()
            )));
        }
        let paths = match file.paths.as_str() {
            "ordered" => PathRule::Ordered,
            "all" => PathRule::All,
            other => {
                return Err(Error::Config(format!(
                    "paths must be \"ordered\" or \"all\", got {other:?}"
                )))
            }
        };
        let mk = |s: &StageFile| StageConfig {
            window: s.window,
            lattice: generate_lattice(s.freq_box),
            downsample: s.downsample,
        };
        Ok(FstConfig {
            patch_shape: file.patch_shape,
            stages: [mk(&file.stages[0]), mk(&file.stages[1]), mk(&file.stages[2])],
            paths,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigFile {
    patch_shape: [usize; 3],
    stages: Vec<StageFile>,
    #[serde(default = "default_paths")]
    paths: String,
}

#[derive(Serialize, Deserialize)]
struct StageFile {
    window: [usize; 3],
    freq_box: [usize; 3],
    downsample: [usize; 3],
}

fn default_paths() -> String {
    "ordered".to_string()
}

/// Identity of one coefficient in the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathId {
    Order0,
    Order1([i32; 3]),
    Order2([i32; 3], [i32; 3]),
}

impl std::fmt::Display for PathId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathId::Order0 => write!(f, "order0"),
            PathId::Order1(a) => write!(f, "order1:{},{},{}", a[0], a[1], a[2]),
            PathId::Order2(a, b) => write!(
                f,
                "order2:{},{},{}|{},{},{}",
                a[0], a[1], a[2], b[0], b[1], b[2]
            ),
        }
    }
}

/// Direct-space circular low-pass convolution, separable along the three
/// axes (the Gaussian window is an exact product of 1-D windows). Cheaper
/// than a spectral round trip for the small windows involved, and outputs
/// of non-negative inputs stay non-negative exactly.
#[derive(Debug, Clone)]
struct SepLowpass {
    n: [usize; 3],
    weights: [Vec<f64>; 3],
    /// Wrapped source index per (position, tap): `srcidx[a][x*T + k]`.
    srcidx: [Vec<u32>; 3],
}

impl SepLowpass {
    fn new(window: [usize; 3], grid: [usize; 3], scale: f64) -> SepLowpass {
        let mut weights: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut srcidx: [Vec<u32>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for a in 0..3 {
            let half = (window[a] as isize - 1) / 2;
            let sigma = window[a] as f64 / 6.0;
            for u in -half..=half {
                let mut w = (-(u * u) as f64 / (2.0 * sigma * sigma)).exp();
                if a == 0 {
                    w *= scale; // fold the bank normalization into one axis
                }
                weights[a].push(w);
            }
            let n = grid[a] as isize;
            for x in 0..n {
                for u in -half..=half {
                    srcidx[a].push((x - u).rem_euclid(n) as u32);
                }
            }
        }
        SepLowpass {
            n: grid,
            weights,
            srcidx,
        }
    }

    fn apply(&self, input: &Array3<f64>) -> Array3<f64> {
        let [n0, n1, n2] = self.n;
        debug_assert_eq!(input.dim(), (n0, n1, n2));
        let mut tmp = Array3::<f64>::zeros((n0, n1, n2));
        let mut out = Array3::<f64>::zeros((n0, n1, n2));

        // Axis 2: short contiguous rows, gathered taps.
        {
            let src = input.as_slice().expect("standard layout");
            let dst = out.as_slice_mut().expect("standard layout");
            let w = &self.weights[2];
            let t = w.len();
            for row in 0..n0 * n1 {
                let base = row * n2;
                for x in 0..n2 {
                    let mut acc = 0.0;
                    for (k, &wk) in w.iter().enumerate() {
                        acc += wk * src[base + self.srcidx[2][x * t + k] as usize];
                    }
                    dst[base + x] = acc;
                }
            }
        }

        // Axis 1: accumulate contiguous length-n2 runs.
        {
            let src = out.as_slice().expect("standard layout");
            let dst = tmp.as_slice_mut().expect("standard layout");
            let w = &self.weights[1];
            let t = w.len();
            for i in 0..n0 {
                let plane = i * n1 * n2;
                for x in 0..n1 {
                    let obase = plane + x * n2;
                    for (k, &wk) in w.iter().enumerate() {
                        let sbase = plane + self.srcidx[1][x * t + k] as usize * n2;
                        for r in 0..n2 {
                            dst[obase + r] += wk * src[sbase + r];
                        }
                    }
                }
            }
        }

        // Axis 0: accumulate contiguous length-n1*n2 planes.
        {
            let src = tmp.as_slice().expect("standard layout");
            let dst = out.as_slice_mut().expect("standard layout");
            dst.fill(0.0);
            let w = &self.weights[0];
            let t = w.len();
            let plane = n1 * n2;
            for x in 0..n0 {
                let obase = x * plane;
                for (k, &wk) in w.iter().enumerate() {
                    let sbase = self.srcidx[0][x * t + k] as usize * plane;
                    for r in 0..plane {
                        dst[obase + r] += wk * src[sbase + r];
                    }
                }
            }
        }
        out
    }
}

/// Reusable transform state: banks, low-pass kernels, and FFT plans for
/// every stage. Immutable and safe to share across threads.
pub struct Scatterer {
    cfg: FstConfig,
    banks: [FilterBank3D; 3],
    ffts: [Fft3; 3],
    lowpass: [SepLowpass; 3],
    paths: Vec<PathId>,
}

impl Scatterer {
    pub fn new(cfg: FstConfig) -> Result<Scatterer> {
        cfg.validate()?;
        let banks = [
            build_filter_bank(&cfg, 0)?,
            build_filter_bank(&cfg, 1)?,
            build_filter_bank(&cfg, 2)?,
        ];
        let ffts = [
            Fft3::new(cfg.stage_grid(0)?),
            Fft3::new(cfg.stage_grid(1)?),
            Fft3::new(cfg.stage_grid(2)?),
        ];
        let lowpass = [
            SepLowpass::new(cfg.stages[0].window, cfg.stage_grid(0)?, banks[0].normalization()),
            SepLowpass::new(cfg.stages[1].window, cfg.stage_grid(1)?, banks[1].normalization()),
            SepLowpass::new(cfg.stages[2].window, cfg.stage_grid(2)?, banks[2].normalization()),
        ];
        let paths = enumerate_paths(&banks, cfg.paths);
        Ok(Scatterer {
            cfg,
            banks,
            ffts,
            lowpass,
            paths,
        })
    }

    pub fn config(&self) -> &FstConfig {
        &self.cfg
    }

    pub fn banks(&self) -> &[FilterBank3D; 3] {
        &self.banks
    }

    /// Coefficient index map: which path each feature column belongs to.
    pub fn paths(&self) -> &[PathId] {
        &self.paths
    }

    pub fn feature_len(&self) -> usize {
        self.paths.len()
    }

    /// Walk every retained path, handing the low-pass output field (after
    /// the stage's downsampling) to `emit` together with its coefficient
    /// index. Band outputs go through FFT convolution and the complex
    /// modulus; low-pass outputs use direct tap convolution, so fields fed
    /// by modulus signals are non-negative exactly.
    fn visit_fields(
        &self,
        patch: ArrayView3<f64>,
        mut emit: impl FnMut(usize, Array3<f64>),
    ) -> Result<()> {
        let g0 = self.cfg.stage_grid(0)?;
        let g1 = self.cfg.stage_grid(1)?;
        if patch.dim() != (g0[0], g0[1], g0[2]) {
            return Err(Error::ShapeMismatch(format!(
                "patch shape {:?} does not match configured {:?}",
                patch.dim(),
                self.cfg.patch_shape
            )));
        }
        let d = [
            self.cfg.stages[0].downsample,
            self.cfg.stages[1].downsample,
            self.cfg.stages[2].downsample,
        ];
        let n1 = self.banks[0].atoms().len();
        let n2 = self.banks[1].atoms().len();

        // Zeroth order: low-pass only, sign preserved.
        let patch_owned = patch.to_owned();
        emit(0, downsample_owned(self.lowpass[0].apply(&patch_owned), d[0]));

        let mut spec0 = patch.map(|&x| C64::new(x, 0.0));
        self.ffts[0].forward(&mut spec0);

        let mut prod0 = Array3::from_elem((g0[0], g0[1], g0[2]), C64::new(0.0, 0.0));
        let mut prod1 = Array3::from_elem((g1[0], g1[1], g1[2]), C64::new(0.0, 0.0));

        let second_order_base = 1 + n1;
        let mut pair_offset = 0usize;
        for ia in 0..n1 {
            multiply_into(&spec0, &self.banks[0].atoms()[ia], &mut prod0);
            self.ffts[0].inverse(&mut prod0);
            let u1 = modulus_downsample(&prod0, d[0]);

            emit(1 + ia, downsample_owned(self.lowpass[1].apply(&u1), d[1]));

            let mut spec1 = u1.map(|&x| C64::new(x, 0.0));
            self.ffts[1].forward(&mut spec1);

            for ib in 0..n2 {
                if self.cfg.paths == PathRule::Ordered && ib <= ia {
                    continue;
                }
                multiply_into(&spec1, &self.banks[1].atoms()[ib], &mut prod1);
                self.ffts[1].inverse(&mut prod1);
                let u2 = modulus_downsample(&prod1, d[1]);
                emit(
                    second_order_base + pair_offset,
                    downsample_owned(self.lowpass[2].apply(&u2), d[2]),
                );
                pair_offset += 1;
            }
        }
        Ok(())
    }

    /// Coefficient vector of one patch: the mean of every path field.
    pub fn coefficients(&self, patch: ArrayView3<f64>) -> Result<Vec<f64>> {
        let mut out = vec![0.0f64; self.feature_len()];
        self.visit_fields(patch, |idx, field| {
            out[idx] = field.sum() / field.len() as f64;
        })?;
        Ok(out)
    }

    /// All low-pass output fields before spatial averaging, in coefficient
    /// order. This is the map whose non-expansiveness the filter-bank
    /// normalization guarantees.
    pub fn fields(&self, patch: ArrayView3<f64>) -> Result<Vec<Array3<f64>>> {
        let mut out: Vec<Option<Array3<f64>>> = vec![None; self.feature_len()];
        self.visit_fields(patch, |idx, field| {
            out[idx] = Some(field);
        })?;
        Ok(out.into_iter().map(|f| f.expect("every path emits")).collect())
    }
}

fn enumerate_paths(banks: &[FilterBank3D; 3], rule: PathRule) -> Vec<PathId> {
    let mut paths = vec![PathId::Order0];
    for &a in banks[0].freqs() {
        paths.push(PathId::Order1(a));
    }
    for (ia, &a) in banks[0].freqs().iter().enumerate() {
        for (ib, &b) in banks[1].freqs().iter().enumerate() {
            if rule == PathRule::Ordered && ib <= ia {
                continue;
            }
            paths.push(PathId::Order2(a, b));
        }
    }
    paths
}

fn multiply_into(spec: &Array3<C64>, atom: &Array3<C64>, out: &mut Array3<C64>) {
    let s = spec.as_slice().expect("standard layout");
    let a = atom.as_slice().expect("standard layout");
    let o = out.as_slice_mut().expect("standard layout");
    for ((x, y), z) in s.iter().zip(a).zip(o.iter_mut()) {
        *z = x * y;
    }
}

fn modulus_downsample(x: &Array3<C64>, f: [usize; 3]) -> Array3<f64> {
    let (n0, n1, n2) = x.dim();
    let (m0, m1, m2) = (n0 / f[0], n1 / f[1], n2 / f[2]);
    let src = x.as_slice().expect("standard layout");
    let mut out = Array3::<f64>::zeros((m0, m1, m2));
    let dst = out.as_slice_mut().expect("standard layout");
    let mut o = 0;
    for i in 0..m0 {
        let ib = i * f[0] * n1 * n2;
        for j in 0..m1 {
            let jb = ib + j * f[1] * n2;
            for k in 0..m2 {
                dst[o] = src[jb + k * f[2]].norm();
                o += 1;
            }
        }
    }
    out
}

fn downsample_owned(x: Array3<f64>, f: [usize; 3]) -> Array3<f64> {
    if f == [1, 1, 1] {
        x
    } else {
        x.slice(s![..;f[0], ..;f[1], ..;f[2]]).to_owned()
    }
}

/// Scattering coefficients of a single patch against prebuilt banks.
pub fn scatter_patch(
    patch: ArrayView3<f64>,
    banks: &[FilterBank3D; 3],
    cfg: &FstConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let ffts = [
        Fft3::new(cfg.stage_grid(0)?),
        Fft3::new(cfg.stage_grid(1)?),
        Fft3::new(cfg.stage_grid(2)?),
    ];
    let lowpass = [
        SepLowpass::new(cfg.stages[0].window, cfg.stage_grid(0)?, banks[0].normalization()),
        SepLowpass::new(cfg.stages[1].window, cfg.stage_grid(1)?, banks[1].normalization()),
        SepLowpass::new(cfg.stages[2].window, cfg.stage_grid(2)?, banks[2].normalization()),
    ];
    let paths = enumerate_paths(banks, cfg.paths);
    let sc = Scatterer {
        cfg: cfg.clone(),
        banks: banks.clone(),
        ffts,
        lowpass,
        paths,
    };
    sc.coefficients(patch)
}

/// Per-pixel scattering features plus the coefficient index map.
pub struct ScatteringFeatures {
    pub feature_set: FeatureSet,
    pub paths: Vec<PathId>,
}

/// Mirror index (half-sample symmetric reflection, period 2n).
fn mirror(idx: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut x = idx % period;
    if x < 0 {
        x += period;
    }
    (if x < n { x } else { period - 1 - x }) as usize
}

fn extract_patch(
    cube: &Array3<f64>,
    row: usize,
    col: usize,
    shape: [usize; 3],
) -> Array3<f64> {
    let (h, w, bands) = cube.dim();
    let rh = (shape[0] as isize - 1) / 2;
    let ch = (shape[1] as isize - 1) / 2;
    let b0 = (bands - shape[2]) / 2;
    Array3::from_shape_fn((shape[0], shape[1], shape[2]), |(u, v, t)| {
        let rr = mirror(row as isize + u as isize - rh, h);
        let cc = mirror(col as isize + v as isize - ch, w);
        cube[(rr, cc, b0 + t)]
    })
}

/// Scattering features for every labeled pixel of a cube. Patches are
/// extracted with symmetric (mirror) spatial padding and a centered
/// spectral window; rows follow row-major pixel scan order.
pub fn scatter_cube(cube: &LabeledCube, cfg: &FstConfig) -> Result<ScatteringFeatures> {
    let (h, w, bands) = cube.cube().dim();
    if cfg.patch_shape[0] % 2 == 0 || cfg.patch_shape[1] % 2 == 0 {
        return Err(Error::Config(format!(
            "patch spatial extents must be odd, got {:?}",
            cfg.patch_shape
        )));
    }
    if cfg.patch_shape[2] > bands
        || cfg.patch_shape[0] > 2 * h
        || cfg.patch_shape[1] > 2 * w
    {
        return Err(Error::Config(format!(
            "patch {:?} does not fit the mirror-padded cube {:?}",
            cfg.patch_shape,
            (h, w, bands)
        )));
    }
    let scatterer = Scatterer::new(cfg.clone())?;
    let pixels = cube.labeled_pixels();

    let rows: Result<Vec<Vec<f64>>> = pixels
        .par_iter()
        .map(|&(r, c, _)| {
            let patch = extract_patch(cube.cube(), r, c, cfg.patch_shape);
            scatterer.coefficients(patch.view())
        })
        .collect();
    let rows = rows?;

    let p = scatterer.feature_len();
    let mut features = Array2::zeros((rows.len(), p));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[(i, j)] = v;
        }
    }
    let raw_labels: Vec<i64> = pixels.iter().map(|&(_, _, l)| l).collect();
    let feature_set = FeatureSet::from_rows(features, &raw_labels)?;
    Ok(ScatteringFeatures {
        feature_set,
        paths: scatterer.paths().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Small, fast configuration for unit tests.
    fn tiny_config() -> FstConfig {
        FstConfig {
            patch_shape: [5, 5, 4],
            stages: [
                StageConfig {
                    window: [3, 3, 3],
                    lattice: generate_lattice([1, 1, 1]),
                    downsample: [1, 1, 1],
                },
                StageConfig {
                    window: [3, 3, 3],
                    lattice: generate_lattice([1, 1, 1]),
                    downsample: [1, 1, 1],
                },
                StageConfig {
                    window: [3, 3, 3],
                    lattice: generate_lattice([1, 1, 1]),
                    downsample: [1, 1, 1],
                },
            ],
            paths: PathRule::Ordered,
        }
    }

    fn random_patch(rng: &mut ChaCha8Rng, shape: [usize; 3]) -> Array3<f64> {
        Array3::from_shape_fn((shape[0], shape[1], shape[2]), |_| rng.gen_range(-1.0..1.0))
    }

    fn l2(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn fields_norm(fields: &[Array3<f64>]) -> f64 {
        fields
            .iter()
            .map(|f| f.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn feature_length_matches_the_path_count_formula() {
        let sc = Scatterer::new(tiny_config()).unwrap();
        // 13 atoms per stage; ordered pairs = 13*12/2 = 78.
        assert_eq!(sc.feature_len(), 1 + 13 + 78);
        let all = Scatterer::new(FstConfig {
            paths: PathRule::All,
            ..tiny_config()
        })
        .unwrap();
        assert_eq!(all.feature_len(), 1 + 13 + 13 * 13);
    }

    #[test]
    fn zero_patch_maps_to_zero_coefficients() {
        let sc = Scatterer::new(tiny_config()).unwrap();
        let patch = Array3::zeros((5, 5, 4));
        let coef = sc.coefficients(patch.view()).unwrap();
        assert!(coef.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn first_and_second_order_coefficients_are_nonnegative() {
        let sc = Scatterer::new(tiny_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let patch = random_patch(&mut rng, [5, 5, 4]);
            let coef = sc.coefficients(patch.view()).unwrap();
            for (path, &c) in sc.paths().iter().zip(&coef) {
                if !matches!(path, PathId::Order0) {
                    assert!(c >= 0.0, "negative coefficient {c} on {path}");
                }
            }
        }
    }

    #[test]
    fn circular_shift_leaves_unit_downsample_coefficients_unchanged() {
        let sc = Scatterer::new(tiny_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let patch = random_patch(&mut rng, [5, 5, 4]);
        let mut shifted = Array3::zeros((5, 5, 4));
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..4 {
                    shifted[((i + 1) % 5, j, k)] = patch[(i, j, k)];
                }
            }
        }
        let a = sc.coefficients(patch.view()).unwrap();
        let b = sc.coefficients(shifted.view()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn scattering_is_nonexpansive_and_energy_decreasing() {
        let sc = Scatterer::new(tiny_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = random_patch(&mut rng, [5, 5, 4]);
            let g = random_patch(&mut rng, [5, 5, 4]);
            let sf = sc.fields(f.view()).unwrap();
            let sg = sc.fields(g.view()).unwrap();

            let in_norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(fields_norm(&sf) <= in_norm + 1e-9);

            let diff_out: f64 = sf
                .iter()
                .zip(&sg)
                .map(|(a, b)| (a - b).iter().map(|x| x * x).sum::<f64>())
                .sum::<f64>()
                .sqrt();
            let diff_in = (&f - &g).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(
                diff_out <= diff_in + 1e-9,
                "expansion: {diff_out} > {diff_in}"
            );
        }
    }

    #[test]
    fn coefficients_are_the_field_means() {
        let sc = Scatterer::new(tiny_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let patch = random_patch(&mut rng, [5, 5, 4]);
        let coef = sc.coefficients(patch.view()).unwrap();
        let fields = sc.fields(patch.view()).unwrap();
        for (c, f) in coef.iter().zip(&fields) {
            assert!((c - f.sum() / f.len() as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn fft_convolution_matches_a_direct_space_oracle() {
        // One band atom, checked against a naive circular convolution with
        // an independently constructed modulated window.
        let cfg = tiny_config();
        let bank = build_filter_bank(&cfg, 0).unwrap();
        let fft = Fft3::new([5, 5, 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let patch = random_patch(&mut rng, [5, 5, 4]);

        let pick = 7usize; // arbitrary atom
        let k = bank.freqs()[pick];
        let mut spec = patch.map(|&x| C64::new(x, 0.0));
        fft.forward(&mut spec);
        let mut via_fft = Array3::from_elem((5, 5, 4), C64::new(0.0, 0.0));
        multiply_into(&spec, &bank.atoms()[pick], &mut via_fft);
        fft.inverse(&mut via_fft);

        // Direct-space atom: Gaussian window (sigma = extent/6), modulated,
        // embedded at the origin with wraparound, scaled like the bank.
        let mut atom = Array3::from_elem((5, 5, 4), C64::new(0.0, 0.0));
        let sigma = 0.5; // 3/6
        for u in -1i64..=1 {
            for v in -1i64..=1 {
                for t in -1i64..=1 {
                    let g = (-((u * u) as f64) / (2.0 * sigma * sigma)
                        - ((v * v) as f64) / (2.0 * sigma * sigma)
                        - ((t * t) as f64) / (2.0 * sigma * sigma))
                        .exp();
                    let phase = 2.0
                        * std::f64::consts::PI
                        * (k[0] as f64 * u as f64 / 5.0
                            + k[1] as f64 * v as f64 / 5.0
                            + k[2] as f64 * t as f64 / 4.0);
                    let val =
                        C64::new(phase.cos(), phase.sin()) * g * bank.normalization();
                    let i = u.rem_euclid(5) as usize;
                    let j = v.rem_euclid(5) as usize;
                    let l = t.rem_euclid(4) as usize;
                    atom[(i, j, l)] = val;
                }
            }
        }
        // Naive circular convolution.
        for x0 in 0..5usize {
            for x1 in 0..5usize {
                for x2 in 0..4usize {
                    let mut acc = C64::new(0.0, 0.0);
                    for y0 in 0..5usize {
                        for y1 in 0..5usize {
                            for y2 in 0..4usize {
                                let a = atom[(
                                    (x0 + 5 - y0) % 5,
                                    (x1 + 5 - y1) % 5,
                                    (x2 + 4 - y2) % 4,
                                )];
                                acc += a * patch[(y0, y1, y2)];
                            }
                        }
                    }
                    assert!(
                        (acc - via_fft[(x0, x1, x2)]).norm() < 1e-10,
                        "mismatch at ({x0},{x1},{x2})"
                    );
                }
            }
        }
    }

    #[test]
    fn patch_shape_mismatch_is_a_shape_error() {
        let sc = Scatterer::new(tiny_config()).unwrap();
        let patch = Array3::zeros((5, 5, 3));
        assert!(matches!(
            sc.coefficients(patch.view()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn constant_zero_cube_scatters_to_zero_rows() {
        let cube = Array3::zeros((6, 6, 4));
        let mut labels = Array2::zeros((6, 6));
        labels[(2, 2)] = 3;
        labels[(4, 1)] = 1;
        let lc = LabeledCube::new(cube, labels).unwrap();
        let out = scatter_cube(&lc, &tiny_config()).unwrap();
        assert_eq!(out.feature_set.n(), 2);
        assert!(out.feature_set.features().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_labeled_pixel_matches_scatter_patch() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cube = Array3::from_shape_fn((7, 7, 4), |_| rng.gen_range(-1.0..1.0));
        let mut labels = Array2::zeros((7, 7));
        labels[(3, 3)] = 2;
        let lc = LabeledCube::new(cube.clone(), labels).unwrap();
        let cfg = tiny_config();
        let out = scatter_cube(&lc, &cfg).unwrap();

        let banks = [
            build_filter_bank(&cfg, 0).unwrap(),
            build_filter_bank(&cfg, 1).unwrap(),
            build_filter_bank(&cfg, 2).unwrap(),
        ];
        let patch = extract_patch(&cube, 3, 3, cfg.patch_shape);
        let direct = scatter_patch(patch.view(), &banks, &cfg).unwrap();
        for (a, b) in out.feature_set.features().row(0).iter().zip(&direct) {
            assert_eq!(a, b, "cube row must equal the patch scattering bit-for-bit");
        }
        assert_eq!(out.paths.len(), direct.len());
    }

    #[test]
    fn pixels_outside_every_patch_cannot_affect_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cube = Array3::from_shape_fn((9, 9, 4), |_| rng.gen_range(-1.0..1.0));
        let mut labels = Array2::zeros((9, 9));
        labels[(2, 2)] = 1; // patch covers rows/cols 0..=4
        let lc = LabeledCube::new(cube.clone(), labels.clone()).unwrap();
        let cfg = tiny_config();
        let base = scatter_cube(&lc, &cfg).unwrap();

        let mut tampered = cube.clone();
        for i in 6..9 {
            for j in 6..9 {
                for b in 0..4 {
                    tampered[(i, j, b)] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        let lc2 = LabeledCube::new(tampered, labels).unwrap();
        let again = scatter_cube(&lc2, &cfg).unwrap();
        for (a, b) in base
            .feature_set
            .features()
            .iter()
            .zip(again.feature_set.features().iter())
        {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn thread_count_does_not_change_the_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cube = Array3::from_shape_fn((8, 8, 4), |_| rng.gen_range(-1.0..1.0));
        let labels = Array2::from_shape_fn((8, 8), |(i, j)| ((i + j) % 3) as i64);
        let lc = LabeledCube::new(cube, labels).unwrap();
        let cfg = tiny_config();

        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| scatter_cube(&lc, &cfg).unwrap())
        };
        let a = run(1);
        let b = run(8);
        for (x, y) in a
            .feature_set
            .features()
            .iter()
            .zip(b.feature_set.features().iter())
        {
            assert!(x.to_bits() == y.to_bits(), "thread count changed bits");
        }
    }

    #[test]
    fn oversized_patches_are_a_config_error() {
        let cube = Array3::zeros((3, 3, 4));
        let mut labels = Array2::zeros((3, 3));
        labels[(1, 1)] = 1;
        let lc = LabeledCube::new(cube, labels).unwrap();
        let mut cfg = tiny_config();
        cfg.patch_shape = [5, 5, 5]; // 5 bands > 4 in the cube
        assert!(matches!(
            scatter_cube(&lc, &cfg),
            Err(Error::Config(_))
        ));

        let mut cfg2 = tiny_config();
        cfg2.patch_shape = [7, 7, 4]; // 7 > 2*3 spatial
        assert!(matches!(scatter_cube(&lc, &cfg2), Err(Error::Config(_))));
    }

    #[test]
    fn mirror_reflection_is_symmetric_at_the_borders() {
        assert_eq!(mirror(-1, 5), 0);
        assert_eq!(mirror(-2, 5), 1);
        assert_eq!(mirror(5, 5), 4);
        assert_eq!(mirror(6, 5), 3);
        assert_eq!(mirror(2, 5), 2);
        // Period-2n folding handles deep overhangs.
        assert_eq!(mirror(-6, 3), 0);
        assert_eq!(mirror(7, 3), 1);
    }

    #[test]
    fn json_round_trip_builds_a_valid_config() {
        let text = r#"{
            "patch_shape": [5, 5, 4],
            "stages": [
                {"window": [3,3,3], "freq_box": [1,1,1], "downsample": [1,1,2]},
                {"window": [3,3,1], "freq_box": [1,1,0], "downsample": [1,1,1]},
                {"window": [3,3,1], "freq_box": [1,1,0], "downsample": [1,1,1]}
            ],
            "paths": "all"
        }"#;
        let cfg = FstConfig::from_json(text).unwrap();
        assert_eq!(cfg.paths, PathRule::All);
        assert_eq!(cfg.stage_grid(1).unwrap(), [5, 5, 2]);
        cfg.validate().unwrap();

        assert!(FstConfig::from_json("{\"patch_shape\": [1,2]}").is_err());
        let two_stages = r#"{
            "patch_shape": [5, 5, 4],
            "stages": [
                {"window": [3,3,3], "freq_box": [1,1,1], "downsample": [1,1,1]},
                {"window": [3,3,3], "freq_box": [1,1,1], "downsample": [1,1,1]}
            ]
        }"#;
        assert!(FstConfig::from_json(two_stages).is_err());
    }

    #[test]
    fn downsampling_divisibility_is_validated() {
        let mut cfg = tiny_config();
        cfg.stages[0].downsample = [1, 1, 3]; // 3 does not divide 4
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn norms_shrink_but_stay_proportional_under_scaling() {
        // S(c*f) coefficients scale by c for the linear order-0 path and
        // by |c| for modulus paths; check with c > 0.
        let sc = Scatterer::new(tiny_config()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let patch = random_patch(&mut rng, [5, 5, 4]);
        let a = sc.coefficients(patch.view()).unwrap();
        let b = sc.coefficients(patch.mapv(|x| 2.0 * x).view()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-10 * (1.0 + l2(&a)));
        }
    }
}
