//! Three-dimensional FFT on dense complex arrays, one rustfft plan per axis.

use ndarray::{Array3, Axis};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

pub type C64 = Complex<f64>;

/// Forward/inverse 3-D transforms for one fixed grid shape. Plans are
/// immutable and safe to share across threads.
pub struct Fft3 {
    shape: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(shape: [usize; 3]) -> Fft3 {
        let mut planner = FftPlanner::new();
        let plan = |p: &mut FftPlanner<f64>, n: usize, dir: FftDirection| p.plan_fft(n, dir);
        Fft3 {
            shape,
            fwd: [
                plan(&mut planner, shape[0], FftDirection::Forward),
                plan(&mut planner, shape[1], FftDirection::Forward),
                plan(&mut planner, shape[2], FftDirection::Forward),
            ],
            inv: [
                plan(&mut planner, shape[0], FftDirection::Inverse),
                plan(&mut planner, shape[1], FftDirection::Inverse),
                plan(&mut planner, shape[2], FftDirection::Inverse),
            ],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    fn apply_axis(&self, data: &mut Array3<C64>, axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let len = self.shape[axis];
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        if axis == 2 {
            // The last axis is contiguous in standard layout: transform the
            // rows in place without gather/scatter.
            if let Some(slice) = data.as_slice_mut() {
                for chunk in slice.chunks_exact_mut(len) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
                return;
            }
        }
        let mut line = vec![C64::new(0.0, 0.0); len];
        for mut lane in data.lanes_mut(Axis(axis)) {
            for (s, v) in line.iter_mut().zip(lane.iter()) {
                *s = *v;
            }
            plan.process_with_scratch(&mut line, &mut scratch);
            for (v, s) in lane.iter_mut().zip(line.iter()) {
                *v = *s;
            }
        }
    }

    pub fn forward(&self, data: &mut Array3<C64>) {
        debug_assert_eq!(data.dim(), (self.shape[0], self.shape[1], self.shape[2]));
        for axis in 0..3 {
            self.apply_axis(data, axis, &self.fwd[axis].clone());
        }
    }

    /// Inverse transform normalized by 1/(n0*n1*n2), so
    /// `inverse(forward(x)) == x` up to rounding.
    pub fn inverse(&self, data: &mut Array3<C64>) {
        debug_assert_eq!(data.dim(), (self.shape[0], self.shape[1], self.shape[2]));
        for axis in 0..3 {
            self.apply_axis(data, axis, &self.inv[axis].clone());
        }
        let scale = 1.0 / (self.shape[0] * self.shape[1] * self.shape[2]) as f64;
        data.mapv_inplace(|z| z * scale);
    }
}
