use hsigeo::fst3d::{FstConfig, Scatterer};
use ndarray::Array3;
use rand::{Rng, SeedableRng};
use std::time::Instant;

fn main() {
    let cfg = FstConfig::default_for_bands(12);
    let sc = Scatterer::new(cfg).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let patch = Array3::from_shape_fn((9, 9, 12), |_| rng.gen_range(-1.0..1.0f64));
    let f = sc.fields(patch.view()).unwrap();
    println!("paths: {}", f.len());
    let t = Instant::now();
    let n = 20;
    for _ in 0..n {
        let f = sc.fields(patch.view()).unwrap();
        std::hint::black_box(&f);
    }
    println!("fields: {:?} per call", t.elapsed() / n);
    let t = Instant::now();
    for _ in 0..n {
        let c = sc.coefficients(patch.view()).unwrap();
        std::hint::black_box(&c);
    }
    println!("coefficients: {:?} per call", t.elapsed() / n);
}
