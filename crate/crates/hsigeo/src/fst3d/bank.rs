//! Time-frequency-shifted 3-D filter banks.
//!
//! Each atom is a real Gaussian window modulated by an integer frequency
//! triple and embedded (centered at the grid origin, wrapping) in the stage
//! grid; atoms are stored in the frequency domain, where modulation is a
//! circular shift of the window spectrum. The whole bank carries one scalar
//! that caps the symmetrized Littlewood-Paley sum at 1, which makes the
//! filtering step non-expansive.

use ndarray::Array3;

use super::fft::{Fft3, C64};
use super::FstConfig;
use crate::error::{Error, Result};

/// Frequency-domain filter bank for one scattering stage.
#[derive(Clone)]
pub struct FilterBank3D {
    grid: [usize; 3],
    freqs: Vec<[i32; 3]>,
    lowpass: Array3<C64>,
    atoms: Vec<Array3<C64>>,
    normalization: f64,
}

impl FilterBank3D {
    pub fn grid(&self) -> [usize; 3] {
        self.grid
    }

    /// Band-atom frequency triples, in lattice-rank order.
    pub fn freqs(&self) -> &[[i32; 3]] {
        &self.freqs
    }

    pub fn lowpass(&self) -> &Array3<C64> {
        &self.lowpass
    }

    pub fn atoms(&self) -> &[Array3<C64>] {
        &self.atoms
    }

    /// Scalar applied to every atom so the bank satisfies the
    /// Littlewood-Paley bound.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// The symmetrized Littlewood-Paley sum: |phi_hat|^2 plus |g_hat_k|^2
    /// over every lattice frequency and its negation, at each discrete
    /// frequency of the grid. Every atom is a circular shift of the
    /// low-pass spectrum, so the sum only needs that one array.
    pub fn littlewood_paley(&self) -> Array3<f64> {
        let mut lp = self.lowpass.map(|z| z.norm_sqr());
        for &k in &self.freqs {
            lp += &shifted_power(&self.lowpass, k);
            lp += &shifted_power(&self.lowpass, [-k[0], -k[1], -k[2]]);
        }
        lp
    }
}

fn shifted_power(base: &Array3<C64>, k: [i32; 3]) -> Array3<f64> {
    circshift(base, k).map(|z| z.norm_sqr())
}

/// out[w] = x[(w - k) mod n] along every axis.
fn circshift(x: &Array3<C64>, k: [i32; 3]) -> Array3<C64> {
    let (n0, n1, n2) = x.dim();
    Array3::from_shape_fn((n0, n1, n2), |(i, j, l)| {
        let s0 = (i as i64 - k[0] as i64).rem_euclid(n0 as i64) as usize;
        let s1 = (j as i64 - k[1] as i64).rem_euclid(n1 as i64) as usize;
        let s2 = (l as i64 - k[2] as i64).rem_euclid(n2 as i64) as usize;
        x[(s0, s1, s2)]
    })
}

/// Largest frequency magnitude whose +/- pair stays distinct modulo n.
pub(crate) fn max_frequency(n: usize) -> i32 {
    if n % 2 == 1 {
        ((n - 1) / 2) as i32
    } else {
        (n / 2).saturating_sub(1) as i32
    }
}

/// Gaussian window (sigma = extent/6 per axis) sampled on the filter
/// extents and embedded centered at the grid origin with wraparound.
fn embedded_window(grid: [usize; 3], window: [usize; 3]) -> Array3<f64> {
    let mut out = Array3::zeros((grid[0], grid[1], grid[2]));
    let half = [
        (window[0] as isize - 1) / 2,
        (window[1] as isize - 1) / 2,
        (window[2] as isize - 1) / 2,
    ];
    let sigma = [
        window[0] as f64 / 6.0,
        window[1] as f64 / 6.0,
        window[2] as f64 / 6.0,
    ];
    for u in -half[0]..=half[0] {
        for v in -half[1]..=half[1] {
            for t in -half[2]..=half[2] {
                let g = (-(u as f64 * u as f64) / (2.0 * sigma[0] * sigma[0])
                    - (v as f64 * v as f64) / (2.0 * sigma[1] * sigma[1])
                    - (t as f64 * t as f64) / (2.0 * sigma[2] * sigma[2]))
                    .exp();
                let i = u.rem_euclid(grid[0] as isize) as usize;
                let j = v.rem_euclid(grid[1] as isize) as usize;
                let l = t.rem_euclid(grid[2] as isize) as usize;
                out[(i, j, l)] = g;
            }
        }
    }
    out
}

pub(crate) fn validate_lattice(lattice: &[[i32; 3]], grid: [usize; 3]) -> Result<()> {
    let lims = [
        max_frequency(grid[0]),
        max_frequency(grid[1]),
        max_frequency(grid[2]),
    ];
    for (n, &k) in lattice.iter().enumerate() {
        for d in 0..3 {
            if k[d].abs() > lims[d] {
                return Err(Error::Config(format!(
                    "frequency {k:?} exceeds the representable range \
                     (axis {d} limit {} on grid {:?})",
                    lims[d], grid
                )));
            }
        }
        for &other in &lattice[..n] {
            if other == k {
                return Err(Error::Config(format!("duplicate lattice frequency {k:?}")));
            }
            if other == [-k[0], -k[1], -k[2]] && k != [0, 0, 0] {
                return Err(Error::Config(format!(
                    "lattice holds both {k:?} and its negation; keep one of each pair"
                )));
            }
        }
    }
    Ok(())
}

/// All nonzero integer triples inside the signed box, keeping the
/// lexicographically positive member of each +/- pair, sorted by
/// (|k|^2, lexicographic) — the fixed lattice ordering.
pub fn generate_lattice(freq_box: [usize; 3]) -> Vec<[i32; 3]> {
    let f = [freq_box[0] as i32, freq_box[1] as i32, freq_box[2] as i32];
    let mut out = Vec::new();
    for k0 in -f[0]..=f[0] {
        for k1 in -f[1]..=f[1] {
            for k2 in -f[2]..=f[2] {
                let k = [k0, k1, k2];
                let positive = k0 > 0 || (k0 == 0 && (k1 > 0 || (k1 == 0 && k2 > 0)));
                if positive {
                    out.push(k);
                }
            }
        }
    }
    out.sort_by_key(|k| {
        (
            k[0] * k[0] + k[1] * k[1] + k[2] * k[2],
            k[0],
            k[1],
            k[2],
        )
    });
    out
}

/// Build the filter bank for one stage of the configured transform.
pub fn build_filter_bank(cfg: &FstConfig, stage: usize) -> Result<FilterBank3D> {
    if stage >= 3 {
        return Err(Error::Config(format!("stage index {stage} out of range")));
    }
    let grid = cfg.stage_grid(stage)?;
    let st = &cfg.stages[stage];
    for d in 0..3 {
        if st.window[d] % 2 == 0 || st.window[d] == 0 {
            return Err(Error::Config(format!(
                "filter extents must be odd and positive, got {:?}",
                st.window
            )));
        }
        if st.window[d] > grid[d] {
            return Err(Error::Config(format!(
                "filter extents {:?} exceed the stage grid {:?}",
                st.window, grid
            )));
        }
    }
    validate_lattice(&st.lattice, grid)?;

    let window = embedded_window(grid, st.window);
    let mut base = window.map(|&x| C64::new(x, 0.0));
    let fft = Fft3::new(grid);
    fft.forward(&mut base);

    // Band atoms: modulation by k is a circular shift of the spectrum.
    // k = 0, when present, denotes the low-pass and adds no band atom.
    let freqs: Vec<[i32; 3]> = st.lattice.iter().copied().filter(|&k| k != [0; 3]).collect();
    let atoms: Vec<Array3<C64>> = freqs.iter().map(|&k| circshift(&base, k)).collect();

    // Symmetrized Littlewood-Paley sum, then cap its peak at 1. The tiny
    // shrink keeps the recomputed sum strictly <= 1 despite rounding.
    let mut lp = base.map(|z| z.norm_sqr());
    for &k in &freqs {
        lp += &shifted_power(&base, k);
        lp += &shifted_power(&base, [-k[0], -k[1], -k[2]]);
    }
    let max_lp = lp.iter().cloned().fold(0.0f64, f64::max);
    if max_lp <= 0.0 {
        return Err(Error::Config("filter window is identically zero".into()));
    }
    let normalization = (1.0 - 1e-13) / max_lp.sqrt();

    let scale = |a: Array3<C64>| a.mapv(|z| z * normalization);
    let lowpass = scale(base);
    let atoms: Vec<Array3<C64>> = atoms.into_iter().map(scale).collect();

    Ok(FilterBank3D {
        grid,
        freqs,
        lowpass,
        atoms,
        normalization,
    })
}
