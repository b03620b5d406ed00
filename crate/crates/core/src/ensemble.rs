//! Base clusterings: Lloyd's k-means with random k, seeded deterministically.

use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{EdsvcError, Result};
use crate::labeling::Labeling;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub max_iters: usize,
    /// Stop once no centroid moves farther than this times the data's RMS spread.
    pub rel_tolerance: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iters: 100,
            rel_tolerance: 1e-6,
        }
    }
}

/// A k-means run with its per-iteration objective.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub labeling: Labeling,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective_trace: Vec<f64>,
}

impl KMeansFit {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&0.0)
    }
}

fn sq_dist(a: &[f64], b: impl IntoIterator<Item = f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn kmeans(data: &DataMatrix, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<Labeling> {
    kmeans_fit(data, k, seed, cfg).map(|f| f.labeling)
}

/// Lloyd iterations from `k` distinct random data points.
///
/// After each assignment step any empty cluster takes the point farthest from
/// its own centroid (among clusters with more than one member), so all `k`
/// clusters stay populated.
pub fn kmeans_fit(data: &DataMatrix, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansFit> {
    let n = data.n_points();
    let d = data.n_dims();
    if k == 0 || k > n {
        return Err(EdsvcError::InvalidClusterCount { k, n_points: n });
    }
    let points: Vec<Vec<f64>> = (0..n).map(|i| data.row(i).to_vec()).collect();

    let mean: Vec<f64> = (0..d)
        .map(|c| points.iter().map(|p| p[c]).sum::<f64>() / n as f64)
        .collect();
    let spread = (points.iter().map(|p| sq_dist(p, mean.iter().copied())).sum::<f64>() / n as f64).sqrt();
    let shift_tol = cfg.rel_tolerance * if spread > 0.0 { spread } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = sample(&mut rng, n, k).iter().map(|i| points[i].clone()).collect();
    let mut assign = vec![0usize; n];
    let mut dist_to_own = vec![0.0; n];
    let mut trace = Vec::new();

    for _ in 0..cfg.max_iters.max(1) {
        for (i, p) in points.iter().enumerate() {
            let (best, bd) = centroids
                .iter()
                .enumerate()
                .map(|(c, cen)| (c, sq_dist(p, cen.iter().copied())))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            assign[i] = best;
            dist_to_own[i] = bd;
        }

        let mut sizes = vec![0usize; k];
        for &a in &assign {
            sizes[a] += 1;
        }
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| sizes[assign[i]] > 1)
                .fold(None::<usize>, |best, i| match best {
                    Some(b) if dist_to_own[b] >= dist_to_own[i] => Some(b),
                    _ => Some(i),
                })
                .expect("k <= n leaves a cluster with a spare point");
            sizes[assign[far]] -= 1;
            assign[far] = c;
            sizes[c] = 1;
            dist_to_own[far] = 0.0;
            centroids[c] = points[far].clone();
        }
        trace.push(dist_to_own.iter().sum());

        let mut sums = vec![vec![0.0; d]; k];
        for (p, &a) in points.iter().zip(&assign) {
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut max_shift: f64 = 0.0;
        for c in 0..k {
            let new: Vec<f64> = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            max_shift = max_shift.max(sq_dist(&new, centroids[c].iter().copied()).sqrt());
            centroids[c] = new;
        }
        if max_shift < shift_tol {
            break;
        }
    }

    Ok(KMeansFit {
        labeling: Labeling::from_assignments(assign),
        centroids,
        objective_trace: trace,
    })
}

/// The M base clusterings and what generated them.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<Labeling>,
    seeds: Vec<u64>,
    drawn_k: Vec<usize>,
}

impl Ensemble {
    pub fn from_members(members: Vec<Labeling>) -> Result<Self> {
        if members.is_empty() {
            return Err(EdsvcError::EmptyEnsemble);
        }
        let n = members[0].len();
        if let Some(m) = members.iter().find(|m| m.len() != n) {
            return Err(EdsvcError::LengthMismatch {
                left: n,
                right: m.len(),
            });
        }
        let drawn_k = members.iter().map(Labeling::n_clusters).collect();
        Ok(Ensemble {
            seeds: vec![0; members.len()],
            members,
            drawn_k,
        })
    }

    pub fn members(&self) -> &[Labeling] {
        &self.members
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    pub fn drawn_k(&self) -> &[usize] {
        &self.drawn_k
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn n_points(&self) -> usize {
        self.members[0].len()
    }

    /// One column per member, header `member_0,member_1,…`, one row per point.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((0..self.len()).map(|m| format!("member_{m}")))?;
        for i in 0..self.n_points() {
            w.write_record(self.members.iter().map(|m| m.assignments()[i].to_string()))?;
        }
        w.flush().map_err(|e| EdsvcError::io("<ensemble csv>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let width = r.headers()?.len();
        let mut cols = vec![Vec::new(); width];
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != width {
                return Err(EdsvcError::RaggedRow {
                    row: row + 2,
                    expected: width,
                    found: rec.len(),
                });
            }
            for (c, cell) in rec.iter().enumerate() {
                let v = cell.trim().parse::<usize>().map_err(|_| EdsvcError::ParseCell {
                    row: row + 2,
                    column: c + 1,
                    value: cell.to_string(),
                })?;
                cols[c].push(v);
            }
        }
        Ensemble::from_members(cols.into_iter().map(Labeling::from_assignments).collect())
    }
}

/// ⌊∛n⌋ computed exactly.
pub fn integer_cbrt(n: usize) -> usize {
    let mut r = (n as f64).cbrt().round() as usize;
    while r * r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// M k-means members, each with k uniform on {2, …, ⌊∛N⌋}. The k values and
/// per-member seeds are drawn serially from one ChaCha stream, so parallel
/// generation reproduces the serial result.
pub fn generate_ensemble(
    data: &DataMatrix,
    m_members: usize,
    master_seed: u64,
    cfg: &KMeansConfig,
) -> Result<Ensemble> {
    let n = data.n_points();
    let k_max = integer_cbrt(n);
    if k_max < 2 {
        return Err(EdsvcError::TooFewPoints(n));
    }
    if m_members == 0 {
        return Err(EdsvcError::EmptyEnsemble);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let plan: Vec<(usize, u64)> = (0..m_members)
        .map(|_| (rng.random_range(2..=k_max), rng.random::<u64>()))
        .collect();
    let members = plan
        .par_iter()
        .map(|&(k, seed)| kmeans(data, k, seed, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        members,
        seeds: plan.iter().map(|p| p.1).collect(),
        drawn_k: plan.iter().map(|p| p.0).collect(),
    })
}
