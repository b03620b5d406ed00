//! Ensemble-driven support vector clustering.
//!
//! Support vector clustering (SVC) finds the smallest sphere enclosing the data
//! in a Gaussian-kernel feature space; the connected pieces of the sphere's
//! preimage are the clusters. Its two parameters, the kernel width `q` and the
//! trade-off `C`, are chosen here without ground truth: a crowd of cheap
//! k-means clusterings with random `k` is generated, and the `(q, C)` whose
//! SVC result has the highest average NMI against that crowd wins.
//!
//! ```no_run
//! use edsvc::{datasets, edsvc, EdsvcConfig};
//!
//! let moons = datasets::two_moons(200, 0.02, 1);
//! let result = edsvc(&moons.data, &EdsvcConfig::default()).unwrap();
//! println!("q = {}, C = {}, {} clusters", result.q_hat, result.c_hat, result.final_labeling.n_clusters());
//! ```
//!
//! Module map:
//!
//! - [`data`]: CSV loading, min-max normalization, squared-distance matrix and its cache file
//! - [`svc`]: the dual solver, radius function and KKT diagnostics
//! - [`labeling`]: segment connectivity, components and bounded-point attachment
//! - [`ensemble`]: k-means and ensemble generation
//! - [`eval`]: NMI and ANMI
//! - [`estimator`]: parameter grids, the two scans and the full method
//! - [`pipeline`]: file-in, files-out runs used by the `edsvc` binary

pub mod data;
pub mod datasets;
pub mod ensemble;
pub mod error;
pub mod estimator;
pub mod eval;
pub mod labeling;
pub mod pipeline;
pub mod svc;

pub use data::{
    load_csv, normalize_minmax, pairwise_sq_dists, DataMatrix, DistanceMatrix, GroundTruthLabels, LabelColumn,
};
pub use ensemble::{generate_ensemble, kmeans, Ensemble, KMeansConfig};
pub use error::{EdsvcError, Result};
pub use estimator::{edsvc, scan_c, scan_q, EdsvcConfig, EstimationResult, ParamGrid, ScanEntry, SvcSettings};
pub use eval::{anmi, nmi};
pub use labeling::{svc_cluster, Labeling, LabelingConfig};
pub use svc::{solve_wolfe_dual, PointRole, SolverConfig, SphereModel};
