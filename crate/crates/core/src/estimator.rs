//! Unsupervised selection of the kernel width q and trade-off C.
//!
//! One coordinate pass: scan q at fixed C₀, keep the q with the highest ANMI
//! against the ensemble, then scan C at that q. Ground-truth labels are not an
//! input to anything in this module.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::data::{normalize_minmax, pairwise_sq_dists, DataMatrix, DistanceMatrix};
use crate::ensemble::{generate_ensemble, Ensemble, KMeansConfig};
use crate::error::{EdsvcError, Result};
use crate::eval::anmi;
use crate::labeling::{svc_cluster_detailed, Labeling, LabelingConfig};
use crate::svc::{kkt_residual, min_feasible_c, PointRole, SolverConfig};

/// ANMI recorded for a candidate whose SVC run failed.
pub const FAILED_ANMI: f64 = -1.0;

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
        })
        .collect();
    v.dedup();
    v
}

/// `n_q` widths log-uniform on [0.1/D̄², 100/D̄²], D̄² the mean nonzero squared
/// distance. A single candidate sits at the log-midpoint.
pub fn build_q_grid(dists: &DistanceMatrix, n_q: usize) -> Result<Vec<f64>> {
    if n_q == 0 {
        return Err(EdsvcError::InvalidParameter("n_q must be positive".into()));
    }
    let mean = dists
        .mean_nonzero()
        .ok_or_else(|| EdsvcError::InvalidData("all points coincide; no kernel scale".into()))?;
    let (lo, hi) = (0.1 / mean, 100.0 / mean);
    if n_q == 1 {
        return Ok(vec![(lo * hi).sqrt()]);
    }
    Ok(log_space(lo, hi, n_q))
}

/// `n_c` trade-offs log-uniform on [1/N, 1]; the lower end is nudged up to the
/// smallest float with N·C ≥ 1. A single candidate is C = 1.
pub fn build_c_grid(n_points: usize, n_c: usize) -> Result<Vec<f64>> {
    if n_c == 0 || n_points == 0 {
        return Err(EdsvcError::InvalidParameter("n_c and N must be positive".into()));
    }
    if n_c == 1 {
        return Ok(vec![1.0]);
    }
    Ok(log_space(min_feasible_c(n_points), 1.0, n_c))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub q_values: Vec<f64>,
    pub c_values: Vec<f64>,
    /// C₀, the trade-off held fixed during the q scan.
    pub c_init: f64,
}

impl ParamGrid {
    pub fn new(q_values: Vec<f64>, c_values: Vec<f64>, c_init: f64, n_points: usize) -> Result<Self> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if q_values.is_empty() || c_values.is_empty() {
            return Err(EdsvcError::InvalidParameter("empty parameter grid".into()));
        }
        if !increasing(&q_values) || !increasing(&c_values) {
            return Err(EdsvcError::InvalidParameter("grids must be strictly increasing".into()));
        }
        if q_values[0] <= 0.0 || !q_values.iter().all(|q| q.is_finite()) {
            return Err(EdsvcError::InvalidParameter(
                "every q must be positive and finite".into(),
            ));
        }
        let n = n_points as f64;
        if c_values.iter().chain(std::iter::once(&c_init)).any(|&c| n * c < 1.0) {
            return Err(EdsvcError::InvalidParameter(format!(
                "every C must satisfy N*C >= 1 (N = {n_points})"
            )));
        }
        Ok(ParamGrid {
            q_values,
            c_values,
            c_init,
        })
    }

    pub fn build(dists: &DistanceMatrix, n_q: usize, n_c: usize, c_init: f64) -> Result<Self> {
        let n = dists.n_points();
        Self::new(build_q_grid(dists, n_q)?, build_c_grid(n, n_c)?, c_init, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanStage {
    Q,
    C,
}

impl ScanStage {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanStage::Q => "q",
            ScanStage::C => "c",
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanEntry {
    pub stage: ScanStage,
    pub param_value: f64,
    /// [`FAILED_ANMI`] when the SVC run failed.
    pub anmi: f64,
    pub n_clusters: usize,
    pub n_svs: usize,
    pub n_bsvs: usize,
    pub solve_residual: f64,
}

impl ScanEntry {
    pub fn failed(&self) -> bool {
        self.anmi < 0.0
    }
}

/// Solver and labeling settings shared by every SVC run of a scan.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvcSettings {
    pub solver: SolverConfig,
    pub labeling: LabelingConfig,
}

/// Runs SVC at (q, C) and scores the result against the ensemble.
pub fn evaluate_candidate(
    data: &DataMatrix,
    dists: &DistanceMatrix,
    ensemble: &Ensemble,
    q: f64,
    c_param: f64,
    settings: &SvcSettings,
) -> Result<(Labeling, ScanEntry)> {
    let out = svc_cluster_detailed(data, dists, q, c_param, &settings.solver, &settings.labeling)?;
    let score = anmi(&out.labeling, ensemble)?;
    let entry = ScanEntry {
        stage: ScanStage::Q,
        param_value: q,
        anmi: score,
        n_clusters: out.labeling.n_clusters(),
        n_svs: out.model.count_role(PointRole::Support),
        n_bsvs: out.model.count_role(PointRole::Bounded),
        solve_residual: kkt_residual(&out.model, dists),
    };
    Ok((out.labeling, entry))
}

fn run_scan(
    data: &DataMatrix,
    dists: &DistanceMatrix,
    ensemble: &Ensemble,
    stage: ScanStage,
    candidates: &[(f64, f64)],
    settings: &SvcSettings,
) -> Result<Vec<ScanEntry>> {
    if ensemble.n_points() != data.n_points() {
        return Err(EdsvcError::LengthMismatch {
            left: ensemble.n_points(),
            right: data.n_points(),
        });
    }
    let entries: Vec<ScanEntry> = candidates
        .par_iter()
        .map(|&(q, c)| {
            let param_value = match stage {
                ScanStage::Q => q,
                ScanStage::C => c,
            };
            match evaluate_candidate(data, dists, ensemble, q, c, settings) {
                Ok((_, e)) => ScanEntry {
                    stage,
                    param_value,
                    ..e
                },
                Err(err) => {
                    log::warn!("{} scan: candidate q={q} C={c} failed: {err}", stage.as_str());
                    let solve_residual = match err {
                        EdsvcError::NotConverged { gap, .. } => gap,
                        _ => f64::NAN,
                    };
                    ScanEntry {
                        stage,
                        param_value,
                        anmi: FAILED_ANMI,
                        n_clusters: 0,
                        n_svs: 0,
                        n_bsvs: 0,
                        solve_residual,
                    }
                }
            }
        })
        .collect();
    Ok(entries)
}

/// Index of the best non-failed entry. With `prefer_last` ties go to the later
/// (larger-parameter) entry, otherwise to the earlier.
fn argmax(entries: &[ScanEntry], prefer_last: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, e) in entries.iter().enumerate() {
        if e.failed() {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if e.anmi > entries[b].anmi || (prefer_last && e.anmi == entries[b].anmi) => Some(i),
            keep => keep,
        };
    }
    best
}

/// Picks q̂ at fixed C₀; ties go to the smaller q.
pub fn scan_q(
    data: &DataMatrix,
    dists: &DistanceMatrix,
    ensemble: &Ensemble,
    q_values: &[f64],
    c_init: f64,
    settings: &SvcSettings,
) -> Result<(f64, Vec<ScanEntry>)> {
    let candidates: Vec<(f64, f64)> = q_values.iter().map(|&q| (q, c_init)).collect();
    let entries = run_scan(data, dists, ensemble, ScanStage::Q, &candidates, settings)?;
    let best = argmax(&entries, false).ok_or(EdsvcError::AllCandidatesFailed(entries.len(), "q"))?;
    Ok((entries[best].param_value, entries))
}

/// Picks Ĉ at fixed q̂; ties go to the larger C.
pub fn scan_c(
    data: &DataMatrix,
    dists: &DistanceMatrix,
    ensemble: &Ensemble,
    c_values: &[f64],
    q_hat: f64,
    settings: &SvcSettings,
) -> Result<(f64, Vec<ScanEntry>)> {
    let candidates: Vec<(f64, f64)> = c_values.iter().map(|&c| (q_hat, c)).collect();
    let entries = run_scan(data, dists, ensemble, ScanStage::C, &candidates, settings)?;
    let best = argmax(&entries, true).ok_or(EdsvcError::AllCandidatesFailed(entries.len(), "C"))?;
    Ok((entries[best].param_value, entries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdsvcConfig {
    pub master_seed: u64,
    /// Ensemble size M.
    pub m_members: usize,
    pub n_q: usize,
    pub n_c: usize,
    /// C₀.
    pub c_init: f64,
    /// Min-max normalize features before anything else.
    pub normalize: bool,
    pub svc: SvcSettings,
    pub kmeans: KMeansConfig,
}

impl Default for EdsvcConfig {
    fn default() -> Self {
        EdsvcConfig {
            master_seed: 0,
            m_members: 10,
            n_q: 100,
            n_c: 100,
            c_init: 1.0,
            normalize: true,
            svc: SvcSettings::default(),
            kmeans: KMeansConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub grid: ParamGrid,
    pub ensemble: Ensemble,
    pub q_hat: f64,
    pub c_hat: f64,
    pub q_scan: Vec<ScanEntry>,
    pub c_scan: Vec<ScanEntry>,
    pub final_labeling: Labeling,
    pub final_anmi: f64,
}

/// Scans and final clustering for an already prepared dataset, ensemble and grid.
pub fn estimate(
    data: &DataMatrix,
    dists: &DistanceMatrix,
    ensemble: Ensemble,
    grid: ParamGrid,
    settings: &SvcSettings,
) -> Result<EstimationResult> {
    let (q_hat, q_scan) = scan_q(data, dists, &ensemble, &grid.q_values, grid.c_init, settings)?;
    log::info!("selected q = {q_hat}");
    let (c_hat, c_scan) = scan_c(data, dists, &ensemble, &grid.c_values, q_hat, settings)?;
    log::info!("selected C = {c_hat}");
    let (final_labeling, final_entry) = evaluate_candidate(data, dists, &ensemble, q_hat, c_hat, settings)?;
    Ok(EstimationResult {
        grid,
        ensemble,
        q_hat,
        c_hat,
        q_scan,
        c_scan,
        final_labeling,
        final_anmi: final_entry.anmi,
    })
}

/// The whole method: normalize, build the ensemble and grids, scan q then C,
/// and cluster with the selected pair.
pub fn edsvc(data: &DataMatrix, cfg: &EdsvcConfig) -> Result<EstimationResult> {
    let data = if cfg.normalize {
        normalize_minmax(data)
    } else {
        data.clone()
    };
    let dists = pairwise_sq_dists(&data);
    let ensemble = generate_ensemble(&data, cfg.m_members, cfg.master_seed, &cfg.kmeans)?;
    let grid = ParamGrid::build(&dists, cfg.n_q, cfg.n_c, cfg.c_init)?;
    estimate(&data, &dists, ensemble, grid, &cfg.svc)
}

const SCAN_HEADER: [&str; 7] = [
    "stage",
    "param_value",
    "anmi",
    "n_clusters",
    "n_svs",
    "n_bsvs",
    "solve_residual",
];

pub fn write_scan_csv<W: Write>(writer: W, entries: &[ScanEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCAN_HEADER)?;
    for e in entries {
        w.write_record([
            e.stage.as_str().to_string(),
            e.param_value.to_string(),
            e.anmi.to_string(),
            e.n_clusters.to_string(),
            e.n_svs.to_string(),
            e.n_bsvs.to_string(),
            e.solve_residual.to_string(),
        ])?;
    }
    w.flush().map_err(|e| EdsvcError::io("<scan csv>", e))?;
    Ok(())
}

pub fn read_scan_csv<R: Read>(reader: R) -> Result<Vec<ScanEntry>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let bad = |c: usize| EdsvcError::ParseCell {
            row: row + 2,
            column: c + 1,
            value: cell(c).to_string(),
        };
        let float = |c: usize| cell(c).parse::<f64>().map_err(|_| bad(c));
        let int = |c: usize| cell(c).parse::<usize>().map_err(|_| bad(c));
        let stage = match cell(0) {
            "q" => ScanStage::Q,
            "c" => ScanStage::C,
            _ => return Err(bad(0)),
        };
        out.push(ScanEntry {
            stage,
            param_value: float(1)?,
            anmi: float(2)?,
            n_clusters: int(3)?,
            n_svs: int(4)?,
            n_bsvs: int(5)?,
            solve_residual: float(6)?,
        });
    }
    Ok(out)
}
