use hsigeo::fst3d::{Fft3, C64};
use ndarray::Array3;
use std::time::Instant;

fn main() {
    for shape in [[9usize, 9, 12], [9, 9, 6], [9, 9, 3]] {
        let fft = Fft3::new(shape);
        let mut data = Array3::from_shape_fn((shape[0], shape[1], shape[2]), |(i, j, k)| {
            C64::new((i * 31 + j * 7 + k) as f64 * 0.01, 0.0)
        });
        let n = 3000;
        let t = Instant::now();
        for _ in 0..n {
            fft.forward(&mut data);
            fft.inverse(&mut data);
        }
        let per = t.elapsed() / (2 * n);
        println!("{:?}: {:?} per transform", shape, per);
    }
    // raw rustfft 1-D costs
    let mut planner = rustfft::FftPlanner::<f64>::new();
    for len in [9usize, 12, 6, 3, 486, 972] {
        let plan = planner.plan_fft_forward(len);
        let mut buf = vec![C64::new(1.0, 0.0); len];
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let n = 200_000usize.min(2_000_000 / len.max(1));
        let t = Instant::now();
        for _ in 0..n {
            plan.process_with_scratch(&mut buf, &mut scratch);
        }
        println!("1-D len {len}: {:?}", t.elapsed() / n as u32);
    }
}
