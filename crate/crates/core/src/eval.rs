//! Normalized mutual information and its ensemble average.

use rayon::prelude::*;

use crate::ensemble::Ensemble;
use crate::error::{EdsvcError, Result};
use crate::labeling::Labeling;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `counts[u][v]` = points with cluster `u` in `a` and `v` in `b`.
    pub counts: Vec<Vec<usize>>,
    pub row_sums: Vec<usize>,
    pub col_sums: Vec<usize>,
    pub total: usize,
}

pub fn contingency(a: &Labeling, b: &Labeling) -> Result<ContingencyTable> {
    if a.len() != b.len() {
        return Err(EdsvcError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut counts = vec![vec![0usize; b.n_clusters()]; a.n_clusters()];
    let mut row_sums = vec![0usize; a.n_clusters()];
    let mut col_sums = vec![0usize; b.n_clusters()];
    for (&u, &v) in a.assignments().iter().zip(b.assignments()) {
        counts[u][v] += 1;
        row_sums[u] += 1;
        col_sums[v] += 1;
    }
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        total: a.len(),
    })
}

fn entropy(sizes: &[usize], total: f64) -> f64 {
    sizes
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

impl ContingencyTable {
    /// True when every row and every column has exactly one nonzero cell,
    /// i.e. the two partitions agree up to relabeling.
    pub fn is_permutation(&self) -> bool {
        let one_nonzero = |it: &mut dyn Iterator<Item = usize>| it.filter(|&c| c > 0).count() == 1;
        self.counts.iter().all(|row| one_nonzero(&mut row.iter().copied()))
            && (0..self.col_sums.len()).all(|v| one_nonzero(&mut self.counts.iter().map(|row| row[v])))
    }

    pub fn mutual_information(&self) -> f64 {
        let n = self.total as f64;
        let mut mi = 0.0;
        for (u, row) in self.counts.iter().enumerate() {
            for (v, &c) in row.iter().enumerate() {
                if c > 0 {
                    let c = c as f64;
                    mi += c / n * (c * n / (self.row_sums[u] as f64 * self.col_sums[v] as f64)).ln();
                }
            }
        }
        mi
    }
}

/// `I(a,b) / √(H(a)·H(b))` with natural logs.
///
/// Identical partitions (up to relabeling) score exactly 1, including two
/// single-cluster partitions. Otherwise a zero-entropy side scores 0.
pub fn nmi(a: &Labeling, b: &Labeling) -> Result<f64> {
    let table = contingency(a, b)?;
    if table.total == 0 {
        return Err(EdsvcError::InvalidData("empty labelings".into()));
    }
    if table.is_permutation() {
        return Ok(1.0);
    }
    let n = table.total as f64;
    let denom = (entropy(&table.row_sums, n) * entropy(&table.col_sums, n)).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((table.mutual_information() / denom).clamp(0.0, 1.0))
}

/// Mean NMI between `candidate` and each ensemble member.
pub fn anmi(candidate: &Labeling, ensemble: &Ensemble) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(EdsvcError::EmptyEnsemble);
    }
    let scores = ensemble
        .members()
        .par_iter()
        .map(|m| nmi(m, candidate))
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
