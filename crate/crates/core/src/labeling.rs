//! Cluster labeling from a trained sphere.
//!
//! Two non-bounded points belong to the same cluster when the straight segment
//! between them stays inside the sphere's preimage, tested at `m` evenly spaced
//! interior samples. Clusters are the connected components of that graph;
//! bounded support vectors are attached afterwards to their nearest labeled
//! neighbour.
//!
//! Sample points are never materialized in input space. For `y = (1−t)xᵢ + t xⱼ`
//!
//! ```text
//! ‖y − xₖ‖² = (1−t)‖xᵢ − xₖ‖² + t‖xⱼ − xₖ‖² − t(1−t)‖xᵢ − xⱼ‖²
//! ```
//!
//! which factors into per-endpoint terms; see `SegmentTester`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::data::{DataMatrix, DistanceMatrix};
use crate::error::{EdsvcError, Result};
use crate::svc::{solve_wolfe_dual, SolverConfig, SphereModel};

/// A partition of N points into clusters `0..n_clusters`, every id in use.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling {
    assignments: Vec<usize>,
    n_clusters: usize,
}

impl Labeling {
    /// Validates that ids are exactly `0..k` with every id used.
    pub fn new(assignments: Vec<usize>) -> Result<Self> {
        let k = assignments.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &a in &assignments {
            seen[a] = true;
        }
        if assignments.is_empty() || seen.iter().any(|s| !s) {
            return Err(EdsvcError::InvalidData(
                "cluster ids must be contiguous from 0 and non-empty".into(),
            ));
        }
        Ok(Labeling {
            assignments,
            n_clusters: k,
        })
    }

    /// Relabels arbitrary ids to `0..k` in order of first appearance.
    pub fn from_assignments(raw: Vec<usize>) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignments: Vec<usize> = raw
            .into_iter()
            .map(|a| {
                let next = map.len();
                *map.entry(a).or_insert(next)
            })
            .collect();
        Labeling {
            n_clusters: map.len(),
            assignments,
        }
    }

    /// Everything in cluster 0.
    pub fn single_cluster(n: usize) -> Self {
        Labeling {
            assignments: vec![0; n],
            n_clusters: usize::from(n > 0),
        }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelingConfig {
    /// Interior samples per segment.
    pub n_segment_samples: usize,
    /// A sample is inside when R²(y) ≤ R²·(1 + radius_slack).
    pub radius_slack: f64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        LabelingConfig {
            n_segment_samples: 10,
            radius_slack: 1e-7,
        }
    }
}

/// Undirected graph over the non-bounded points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    pub n_nodes: usize,
    /// Node pairs `(a, b)` with `a < b`.
    pub edges: Vec<(usize, usize)>,
    /// Node index → original point index.
    pub node_index_map: Vec<usize>,
}

/// Component ids for the graph's nodes, in node order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialLabeling {
    pub node_index_map: Vec<usize>,
    pub components: Vec<usize>,
    pub n_components: usize,
}

/// Sample indices `1..=m` ordered midpoint first. The order only affects how
/// soon an outside sample is found.
fn sample_order(m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=m).collect();
    // |2s − (m+1)| is the distance from the midpoint in units of 1/(2(m+1))
    order.sort_by_key(|&s| ((2 * s).abs_diff(m + 1), s));
    order
}

/// Sample positions `t = s/(m+1)` for `s = 1..=m`, in midpoint-first order.
pub fn sample_positions(m: usize) -> Vec<f64> {
    sample_order(m).into_iter().map(|s| s as f64 / (m + 1) as f64).collect()
}

/// Segments with `q·t(1−t)·‖xᵢ − xⱼ‖²` above this are evaluated term by term,
/// so the factored form never overflows.
const MAX_FACTOR_EXPONENT: f64 = 600.0;

/// Shared precomputation for testing many segments against one model.
///
/// For sample `s` the kernel term factors as
/// `exp(−q·t·d_ak) · exp(−q·(1−t)·d_bk) · exp(q·t(1−t)·d_ab)`, so per node we
/// store `√βₖ·exp(−q·(s/(m+1))·d_node,k)` for every `s` and active `k`, and a
/// sample becomes one dot product. Underflow in a stored factor only drops
/// terms below e^(−745+600).
struct SegmentTester<'a> {
    model: &'a SphereModel,
    threshold: f64,
    m: usize,
    order: Vec<usize>,
    /// `t_s` and `1 − t_s` indexed by `s` (entry 0 unused).
    t: Vec<f64>,
    one_minus_t: Vec<f64>,
    /// `t(1−t)` from integers, identical for `s` and `m+1−s`.
    weight: Vec<f64>,
    /// Squared distances from each node to each active point.
    to_active: Vec<Vec<f64>>,
    /// `factors[node][(s−1)·n_active + k]`.
    factors: Vec<Vec<f64>>,
}

impl<'a> SegmentTester<'a> {
    /// `rows[node][k]` is the squared distance from the node to training point `k`.
    fn new(model: &'a SphereModel, cfg: &LabelingConfig, rows: &[&[f64]]) -> Self {
        let m = cfg.n_segment_samples.max(1);
        let denom = (m + 1) as f64;
        let t: Vec<f64> = (0..=m).map(|s| s as f64 / denom).collect();
        let one_minus_t: Vec<f64> = (0..=m).map(|s| (m + 1 - s) as f64 / denom).collect();
        let weight: Vec<f64> = (0..=m).map(|s| (s * (m + 1 - s)) as f64 / (denom * denom)).collect();
        let active = model.active_indices();
        let root_beta: Vec<f64> = active.iter().map(|&k| model.beta()[k].sqrt()).collect();
        let q = model.q();
        let to_active: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| active.iter().map(|&k| row[k]).collect())
            .collect();
        let factors = to_active
            .iter()
            .map(|d| {
                let mut f = Vec::with_capacity(m * active.len());
                for ts in &t[1..] {
                    f.extend(d.iter().zip(&root_beta).map(|(dk, rb)| rb * (-q * ts * dk).exp()));
                }
                f
            })
            .collect();
        SegmentTester {
            model,
            threshold: model.sq_radius() * (1.0 + cfg.radius_slack),
            m,
            order: sample_order(m),
            t,
            one_minus_t,
            weight,
            to_active,
            factors,
        }
    }

    fn inside_r2(&self, kernel_sum: f64) -> bool {
        1.0 - 2.0 * kernel_sum + self.model.self_kernel_term() <= self.threshold
    }

    /// Sample `s` sits at `y = t_s·x_a + (1 − t_s)·x_b`; the set of samples is
    /// the same either way round.
    fn inside(&self, a: usize, b: usize, ab: f64) -> bool {
        let q = self.model.q();
        let n_act = self.model.active_indices().len();
        if q * 0.25 * ab > MAX_FACTOR_EXPONENT {
            let beta = self.model.beta();
            let active = self.model.active_indices();
            let (da, db) = (&self.to_active[a], &self.to_active[b]);
            return self.order.iter().all(|&s| {
                let (t, u, w) = (self.t[s], self.one_minus_t[s], self.weight[s]);
                let sum: f64 = (0..n_act)
                    .map(|k| {
                        let d = (t * da[k] + u * db[k] - w * ab).max(0.0);
                        beta[active[k]] * (-q * d).exp()
                    })
                    .sum();
                self.inside_r2(sum)
            });
        }
        let (fa, fb) = (&self.factors[a], &self.factors[b]);
        self.order.iter().all(|&s| {
            let ra = &fa[(s - 1) * n_act..s * n_act];
            let rb = &fb[(self.m - s) * n_act..(self.m + 1 - s) * n_act];
            let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
            self.inside_r2(dot * (q * self.weight[s] * ab).exp())
        })
    }
}

fn sq_dists_from(data: &DataMatrix, i: usize) -> Vec<f64> {
    let xi = data.row(i);
    (0..data.n_points())
        .map(|k| xi.iter().zip(data.row(k).iter()).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect()
}

/// Whether the open segment between points `i` and `j` stays inside the sphere.
pub fn segment_connected(model: &SphereModel, data: &DataMatrix, i: usize, j: usize, cfg: &LabelingConfig) -> bool {
    if i == j {
        return true;
    }
    let to_i = sq_dists_from(data, i);
    let to_j = sq_dists_from(data, j);
    let ab = to_i[j];
    SegmentTester::new(model, cfg, &[&to_i, &to_j]).inside(0, 1, ab)
}

/// Tests every pair of non-bounded points.
pub fn build_adjacency(model: &SphereModel, data: &DataMatrix, cfg: &LabelingConfig) -> AdjacencyGraph {
    let node_index_map: Vec<usize> = (0..model.n_points()).filter(|&i| !model.is_bounded(i)).collect();
    let rows: Vec<Vec<f64>> = node_index_map.iter().map(|&i| sq_dists_from(data, i)).collect();
    build_adjacency_from_rows(model, node_index_map, &rows, cfg)
}

/// Same as [`build_adjacency`] but reads distances from the shared matrix.
pub fn build_adjacency_with_dists(model: &SphereModel, dists: &DistanceMatrix, cfg: &LabelingConfig) -> AdjacencyGraph {
    let node_index_map: Vec<usize> = (0..model.n_points()).filter(|&i| !model.is_bounded(i)).collect();
    let rows: Vec<Vec<f64>> = node_index_map.iter().map(|&i| dists.row(i).to_vec()).collect();
    build_adjacency_from_rows(model, node_index_map, &rows, cfg)
}

fn build_adjacency_from_rows(
    model: &SphereModel,
    node_index_map: Vec<usize>,
    rows: &[Vec<f64>],
    cfg: &LabelingConfig,
) -> AdjacencyGraph {
    let row_refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let tester = SegmentTester::new(model, cfg, &row_refs);
    let n_nodes = node_index_map.len();
    let edges: Vec<(usize, usize)> = (0..n_nodes)
        .into_par_iter()
        .flat_map_iter(|a| {
            let tester = &tester;
            let map = &node_index_map;
            ((a + 1)..n_nodes)
                .filter(move |&b| tester.inside(a, b, rows[a][map[b]]))
                .map(move |b| (a, b))
        })
        .collect();
    AdjacencyGraph {
        n_nodes,
        edges,
        node_index_map,
    }
}

/// Component ids numbered in order of each component's smallest node.
pub fn connected_components(graph: &AdjacencyGraph) -> PartialLabeling {
    let n = graph.n_nodes;
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in &graph.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut components = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if components[start] != usize::MAX {
            continue;
        }
        components[start] = next;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if components[v] == usize::MAX {
                    components[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    PartialLabeling {
        node_index_map: graph.node_index_map.clone(),
        components,
        n_components: next,
    }
}

/// Result of attaching bounded support vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsvAssignment {
    pub labeling: Labeling,
    /// Set when every point was bounded and all were put in one cluster.
    pub all_bounded: bool,
}

/// Gives every bounded point the label of its nearest labeled point in input
/// space (ties to the smaller index).
pub fn assign_bsvs(partial: &PartialLabeling, model: &SphereModel, dists: &DistanceMatrix) -> BsvAssignment {
    let n = model.n_points();
    if partial.node_index_map.is_empty() {
        log::warn!("all {n} points are bounded support vectors; returning a single cluster");
        return BsvAssignment {
            labeling: Labeling::single_cluster(n),
            all_bounded: true,
        };
    }
    let mut labels = vec![usize::MAX; n];
    for (&i, &c) in partial.node_index_map.iter().zip(&partial.components) {
        labels[i] = c;
    }
    for p in 0..n {
        if labels[p] != usize::MAX {
            continue;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        for &i in &partial.node_index_map {
            let d = dists.get(p, i);
            if d < best.0 {
                best = (d, i);
            }
        }
        labels[p] = labels[best.1];
    }
    BsvAssignment {
        labeling: Labeling {
            assignments: labels,
            n_clusters: partial.n_components,
        },
        all_bounded: false,
    }
}

/// Everything produced by one SVC run.
#[derive(Debug, Clone)]
pub struct SvcClustering {
    pub model: SphereModel,
    pub labeling: Labeling,
    pub all_bounded: bool,
}

/// SVC(X, q, C): solve the dual, connect, take components, attach bounded points.
pub fn svc_cluster(
    data: &DataMatrix,
    dists: &DistanceMatrix,
    q: f64,
    c_param: f64,
    solver_cfg: &SolverConfig,
    label_cfg: &LabelingConfig,
) -> Result<Labeling> {
    svc_cluster_detailed(data, dists, q, c_param, solver_cfg, label_cfg).map(|r| r.labeling)
}

pub fn svc_cluster_detailed(
    data: &DataMatrix,
    dists: &DistanceMatrix,
    q: f64,
    c_param: f64,
    solver_cfg: &SolverConfig,
    label_cfg: &LabelingConfig,
) -> Result<SvcClustering> {
    if data.n_points() != dists.n_points() {
        return Err(EdsvcError::LengthMismatch {
            left: data.n_points(),
            right: dists.n_points(),
        });
    }
    let model = solve_wolfe_dual(dists, q, c_param, solver_cfg)?;
    let graph = build_adjacency_with_dists(&model, dists, label_cfg);
    let partial = connected_components(&graph);
    let BsvAssignment { labeling, all_bounded } = assign_bsvs(&partial, &model, dists);
    Ok(SvcClustering {
        model,
        labeling,
        all_bounded,
    })
}
