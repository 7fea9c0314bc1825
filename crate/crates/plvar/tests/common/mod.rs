#![allow(dead_code)]

use nalgebra::DMatrix;
use plvar::simulate::{draw_series, example_var2, random_gvar, SimConfig};
use plvar::{GvarModel, GvarStructure, TimeSeries};

pub const BURN_IN: usize = 500;

/// `n` observations of the four-variable VAR(2) reference model.
pub fn example_series(n: usize, seed: u64) -> TimeSeries {
    draw_series(&example_var2(), n, BURN_IN, seed).unwrap()
}

pub fn random_model(d: usize, k: usize, q: f64, seed: u64) -> (GvarModel, GvarStructure) {
    random_gvar(&SimConfig::new(d, k, q, seed)).unwrap()
}

/// Series seeds are offset from model seeds so the two streams never coincide.
pub fn random_series(model: &GvarModel, n: usize, seed: u64) -> TimeSeries {
    draw_series(model, n, BURN_IN, seed + 10_000).unwrap()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Prints one result line and returns whether the criterion passed. Writes
/// to the stderr handle directly so the line survives output capture.
pub fn report(id: &str, passed: bool, detail: impl std::fmt::Display) -> bool {
    use std::io::Write;
    let _ = writeln!(std::io::stderr(), "[{}] {id}: {detail}", if passed { "PASS" } else { "FAIL" });
    passed
}
