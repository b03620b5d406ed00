//! End-to-end runs over a CSV file: estimation, ground-truth reporting and
//! every artifact written to an output directory.
//!
//! Output directory layout after [`run_pipeline`]:
//!
//! | file           | contents                                                        |
//! |----------------|-----------------------------------------------------------------|
//! | `report.txt`   | flat `key = value` report                                       |
//! | `labeling.csv` | `index,cluster[,truth]`                                         |
//! | `ensemble.csv` | one column per base clustering                                  |
//! | `scan_q.csv`   | `stage,param_value,anmi,n_clusters,n_svs,n_bsvs,solve_residual` |
//! | `scan_c.csv`   | same columns for the C stage                                    |
//!
//! Ground-truth labels only reach the report; estimation never sees them.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::data::{
    cached_pairwise_sq_dists, load_csv, normalize_minmax, pairwise_sq_dists, DataMatrix, DistanceMatrix,
    GroundTruthLabels, LabelColumn,
};
use crate::ensemble::{generate_ensemble, Ensemble};
use crate::error::EdsvcError;
use crate::estimator::{build_q_grid, estimate, evaluate_candidate, write_scan_csv, EdsvcConfig, ParamGrid};
use crate::eval::nmi;
use crate::labeling::Labeling;

/// Environment variable consulted for the default output directory.
pub const OUTPUT_DIR_ENV: &str = "EDSVC_OUTPUT_DIR";

#[derive(Debug, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: EdsvcError,
}

impl PipelineError {
    /// 1 usage, 2 data, 3 solver.
    pub fn exit_code(&self) -> i32 {
        match self.source {
            EdsvcError::InvalidParameter(_) => 1,
            EdsvcError::Infeasible { .. } | EdsvcError::NotConverged { .. } | EdsvcError::AllCandidatesFailed(..) => 3,
            _ => 2,
        }
    }
}

trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError>;
}

impl<T> StageContext<T> for Result<T, EdsvcError> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub label_column: Option<LabelColumn>,
    pub output_dir: PathBuf,
    /// Where distance-matrix sidecars are kept; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
    pub edsvc: EdsvcConfig,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            label_column: None,
            output_dir: output_dir.into(),
            cache_dir: None,
            edsvc: EdsvcConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StageTimings {
    pub load: Duration,
    pub distances: Duration,
    pub ensemble: Duration,
    pub estimation: Duration,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub n_points: usize,
    pub n_dims: usize,
    pub n_classes: Option<usize>,
    pub master_seed: u64,
    pub q_hat: f64,
    pub c_hat: f64,
    pub n_clusters: usize,
    pub final_anmi: f64,
    /// Present only when ground truth was supplied.
    pub final_nmi: Option<f64>,
    pub base_nmi: Option<Vec<f64>>,
    pub final_labeling: Labeling,
    pub timings: StageTimings,
}

impl RunReport {
    pub fn mean_base_nmi(&self) -> Option<f64> {
        self.base_nmi.as_ref().map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(s, "n_dims = {}", self.n_dims);
        if let Some(k) = self.n_classes {
            let _ = writeln!(s, "n_classes = {k}");
        }
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "q_hat = {}", self.q_hat);
        let _ = writeln!(s, "c_hat = {}", self.c_hat);
        let _ = writeln!(s, "n_clusters = {}", self.n_clusters);
        let _ = writeln!(s, "final_anmi = {}", self.final_anmi);
        if let (Some(f), Some(base), Some(mean)) = (self.final_nmi, &self.base_nmi, self.mean_base_nmi()) {
            let _ = writeln!(s, "final_nmi = {f}");
            let _ = writeln!(s, "mean_base_nmi = {mean}");
            let _ = writeln!(s, "nmi_gain_over_base = {}", f - mean);
            for (i, v) in base.iter().enumerate() {
                let _ = writeln!(s, "base_nmi_{i} = {v}");
            }
        }
        let t = &self.timings;
        let _ = writeln!(s, "time_load_s = {:.3}", t.load.as_secs_f64());
        let _ = writeln!(s, "time_distances_s = {:.3}", t.distances.as_secs_f64());
        let _ = writeln!(s, "time_ensemble_s = {:.3}", t.ensemble.as_secs_f64());
        let _ = writeln!(s, "time_estimation_s = {:.3}", t.estimation.as_secs_f64());
        s
    }
}

/// Parses a `key = value` report back into pairs.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

struct Prepared {
    data: DataMatrix,
    truth: Option<GroundTruthLabels>,
    dists: DistanceMatrix,
    ensemble: Ensemble,
    timings: StageTimings,
}

fn prepare(config: &RunConfig) -> Result<Prepared, PipelineError> {
    let cfg = &config.edsvc;
    let t0 = Instant::now();
    let (raw, truth) = load_csv(&config.input, config.label_column).stage("load")?;
    let data = if cfg.normalize { normalize_minmax(&raw) } else { raw };
    let load = t0.elapsed();

    let t1 = Instant::now();
    let dists = match &config.cache_dir {
        Some(dir) => cached_pairwise_sq_dists(&data, dir).stage("distances")?,
        None => pairwise_sq_dists(&data),
    };
    let distances = t1.elapsed();

    let t2 = Instant::now();
    let ensemble = generate_ensemble(&data, cfg.m_members, cfg.master_seed, &cfg.kmeans).stage("ensemble")?;
    let ensemble_time = t2.elapsed();

    Ok(Prepared {
        data,
        truth,
        dists,
        ensemble,
        timings: StageTimings {
            load,
            distances,
            ensemble: ensemble_time,
            estimation: Duration::ZERO,
        },
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, EdsvcError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| EdsvcError::io(path, e))
}

fn write_labeling_csv(path: &Path, labeling: &Labeling, truth: Option<&GroundTruthLabels>) -> Result<(), EdsvcError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    match truth {
        Some(_) => w.write_record(["index", "cluster", "truth"])?,
        None => w.write_record(["index", "cluster"])?,
    }
    for (i, c) in labeling.assignments().iter().enumerate() {
        let mut rec = vec![i.to_string(), c.to_string()];
        if let Some(t) = truth {
            rec.push(t.labels()[i].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| EdsvcError::io(path, e))
}

/// Loads, estimates (q̂, Ĉ), clusters, and writes every artifact to `output_dir`.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let prepared = prepare(config)?;
    let Prepared {
        data,
        truth,
        dists,
        ensemble,
        mut timings,
    } = prepared;
    let cfg = &config.edsvc;

    let t = Instant::now();
    let grid = ParamGrid::build(&dists, cfg.n_q, cfg.n_c, cfg.c_init).stage("grid")?;
    let result = estimate(&data, &dists, ensemble, grid, &cfg.svc).stage("estimation")?;
    timings.estimation = t.elapsed();

    let (final_nmi, base_nmi) = match &truth {
        Some(t) => {
            let truth_labels = t.to_labeling();
            let f = nmi(&result.final_labeling, &truth_labels).stage("report")?;
            let base = result
                .ensemble
                .members()
                .iter()
                .map(|m| nmi(m, &truth_labels))
                .collect::<Result<Vec<_>, _>>()
                .stage("report")?;
            (Some(f), Some(base))
        }
        None => (None, None),
    };

    let report = RunReport {
        n_points: data.n_points(),
        n_dims: data.n_dims(),
        n_classes: truth.as_ref().map(GroundTruthLabels::n_classes),
        master_seed: cfg.master_seed,
        q_hat: result.q_hat,
        c_hat: result.c_hat,
        n_clusters: result.final_labeling.n_clusters(),
        final_anmi: result.final_anmi,
        final_nmi,
        base_nmi,
        final_labeling: result.final_labeling.clone(),
        timings,
    };

    let out = &config.output_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| EdsvcError::io(out, e))
        .stage("write")?;
    let write = || -> Result<(), EdsvcError> {
        write_scan_csv(create(&out.join("scan_q.csv"))?, &result.q_scan)?;
        write_scan_csv(create(&out.join("scan_c.csv"))?, &result.c_scan)?;
        result.ensemble.write_csv(create(&out.join("ensemble.csv"))?)?;
        write_labeling_csv(&out.join("labeling.csv"), &result.final_labeling, truth.as_ref())?;
        let report_path = out.join("report.txt");
        let mut f = create(&report_path)?;
        f.write_all(report.to_key_values().as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| EdsvcError::io(&report_path, e))
    };
    write().stage("write")?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: f64,
    pub nmi_vs_truth: f64,
    pub anmi: f64,
    pub n_clusters: usize,
}

/// SVC at fixed C over the whole q grid, scoring each result against both the
/// ground truth and the ensemble. Writes `sweep.csv` to the output directory.
pub fn q_sweep(config: &RunConfig, c_fixed: f64) -> Result<Vec<SweepRow>, PipelineError> {
    let prepared = prepare(config)?;
    let truth = prepared
        .truth
        .as_ref()
        .ok_or_else(|| EdsvcError::InvalidParameter("q sweep needs a label column".into()))
        .stage("sweep")?
        .to_labeling();
    let q_values = build_q_grid(&prepared.dists, config.edsvc.n_q).stage("grid")?;
    let mut rows = Vec::with_capacity(q_values.len());
    for q in q_values {
        let row = match evaluate_candidate(
            &prepared.data,
            &prepared.dists,
            &prepared.ensemble,
            q,
            c_fixed,
            &config.edsvc.svc,
        ) {
            Ok((labeling, entry)) => SweepRow {
                q,
                nmi_vs_truth: nmi(&labeling, &truth).stage("sweep")?,
                anmi: entry.anmi,
                n_clusters: entry.n_clusters,
            },
            Err(e @ EdsvcError::Infeasible { .. }) => return Err(e).stage("sweep"),
            Err(e) => {
                log::warn!("sweep: q={q} failed: {e}");
                SweepRow {
                    q,
                    nmi_vs_truth: f64::NAN,
                    anmi: crate::estimator::FAILED_ANMI,
                    n_clusters: 0,
                }
            }
        };
        rows.push(row);
    }

    let out = &config.output_dir;
    let write = || -> Result<(), EdsvcError> {
        std::fs::create_dir_all(out).map_err(|e| EdsvcError::io(out, e))?;
        let path = out.join("sweep.csv");
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["log2_q", "nmi_vs_truth", "anmi", "n_clusters"])?;
        for r in &rows {
            w.write_record([
                r.q.log2().to_string(),
                r.nmi_vs_truth.to_string(),
                r.anmi.to_string(),
                r.n_clusters.to_string(),
            ])?;
        }
        w.flush().map_err(|e| EdsvcError::io(&path, e))
    };
    write().stage("write")?;
    Ok(rows)
}
