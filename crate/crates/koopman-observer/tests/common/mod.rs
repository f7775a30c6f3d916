#![allow(dead_code)]

use koopman_observer::edmd::{build_data_matrices, empirical_remainder_bound, fit_generator};
use koopman_observer::systems::{by_name, sample_uniform, BenchmarkSystem};
use nalgebra::DMatrix;
use std::path::PathBuf;

/// Identify the quadratically-lifted benchmark exactly the way the pipeline
/// does: 5000 training samples, an independent 1000-sample validation draw.
pub fn identified_example_a(seed: u64) -> (BenchmarkSystem, DMatrix<f64>, f64) {
    let system = by_name("example-a").unwrap();
    let samples = sample_uniform(&system, 5000, seed).unwrap();
    let (x, y) = build_data_matrices(system.dict(), &samples).unwrap();
    let fit = fit_generator(&x, &y, 1e-10).unwrap();
    let validation = sample_uniform(&system, 1000, seed.wrapping_add(1)).unwrap();
    let c_r = empirical_remainder_bound(system.dict(), &fit.a, &validation).unwrap();
    (system, fit.a, c_r)
}

pub fn example_a_reference() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[-2.0, 0.0, 0.0, 0.0, -4.0, 3.0, 0.0, 0.0, -1.0])
}

/// Fresh directory under the target-managed tmp space.
pub fn test_dir(tag: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(tag);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}
