//! Synthetic shapes with known labels, and the bundled UCI benchmark files.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{load_csv_from_reader, DataMatrix, GroundTruthLabels, LabelColumn};
use crate::error::Result;
use crate::labeling::Labeling;

/// A generated dataset and the generator's own labels.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: DataMatrix,
    pub labels: Labeling,
}

fn build(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Synthetic {
    Synthetic {
        data: DataMatrix::from_rows(&rows).expect("generated rows are rectangular and finite"),
        labels: Labeling::from_assignments(labels),
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("standard deviation is non-negative")
}

/// Isotropic Gaussian blobs in 2-D centred on `centers`.
pub fn gaussian_blobs(centers: &[[f64; 2]], n_per_blob: usize, spread: f64, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = normal(spread);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (b, c) in centers.iter().enumerate() {
        for _ in 0..n_per_blob {
            rows.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
            labels.push(b);
        }
    }
    build(rows, labels)
}

/// Two blobs `separation` apart along the x axis.
pub fn two_blobs(n_per_blob: usize, separation: f64, spread: f64, seed: u64) -> Synthetic {
    gaussian_blobs(&[[0.0, 0.0], [separation, 0.0]], n_per_blob, spread, seed)
}

/// Two concentric noisy circles with `n` points split evenly; label 0 is the inner ring.
pub fn concentric_rings(n: usize, inner_radius: f64, outer_radius: f64, noise: f64, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = normal(noise);
    let n_inner = n / 2;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (r, label) = if i < n_inner {
            (inner_radius, 0)
        } else {
            (outer_radius, 1)
        };
        let theta = rng.random_range(0.0..2.0 * PI);
        rows.push(vec![
            r * theta.cos() + jitter.sample(&mut rng),
            r * theta.sin() + jitter.sample(&mut rng),
        ]);
        labels.push(label);
    }
    build(rows, labels)
}

/// The interleaved half circles: upper arc centred at the origin, lower arc
/// centred at (1, 0.5), both of radius 1, with Gaussian noise.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = normal(noise);
    let n_upper = n / 2;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t = rng.random_range(0.0..PI);
        let (x, y, label) = if i < n_upper {
            (t.cos(), t.sin(), 0)
        } else {
            (1.0 - t.cos(), 0.5 - t.sin(), 1)
        };
        rows.push(vec![x + jitter.sample(&mut rng), y + jitter.sample(&mut rng)]);
        labels.push(label);
    }
    build(rows, labels)
}

const WINE_CSV: &str = include_str!("../data/wine.csv");
const BREAST_CANCER_CSV: &str = include_str!("../data/bc.csv");

/// UCI Wine: 178 points, 13 attributes, 3 classes.
pub fn wine() -> Result<(DataMatrix, GroundTruthLabels)> {
    bundled(WINE_CSV)
}

/// UCI Breast Cancer Wisconsin (original) with incomplete rows removed:
/// 683 points, 9 attributes, 2 classes.
pub fn breast_cancer() -> Result<(DataMatrix, GroundTruthLabels)> {
    bundled(BREAST_CANCER_CSV)
}

fn bundled(text: &str) -> Result<(DataMatrix, GroundTruthLabels)> {
    let (data, labels) = load_csv_from_reader(text.as_bytes(), Some(LabelColumn::Last))?;
    Ok((data, labels.expect("bundled files carry a label column")))
}
