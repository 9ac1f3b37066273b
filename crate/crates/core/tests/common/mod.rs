#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use fcmm::dataset::{load_csv, standardize, DataMatrix};

pub fn iris_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

/// Iris features (species column dropped), standardized.
pub fn iris() -> DataMatrix<f64> {
    let drop: BTreeSet<usize> = [4].into_iter().collect();
    let raw = load_csv(iris_path(), &drop, true).expect("iris fixture");
    standardize(&raw).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}
