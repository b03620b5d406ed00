//! Plain SVC with hand-picked parameters. Sweeping q at C = 1 shows the kernel
//! width splitting three blobs into more and more clusters; lowering C at a
//! fixed q turns stragglers into bounded support vectors.
//!
//!     cargo run --release --example fixed_parameters

use edsvc::datasets::gaussian_blobs;
use edsvc::labeling::svc_cluster_detailed;
use edsvc::{nmi, normalize_minmax, pairwise_sq_dists, LabelingConfig, PointRole, Result, SolverConfig};

fn main() -> Result<()> {
    let blobs = gaussian_blobs(&[[0.0, 0.0], [6.0, 0.0], [3.0, 5.0]], 40, 0.8, 11);
    let data = normalize_minmax(&blobs.data);
    let dists = pairwise_sq_dists(&data);
    let (solver, labeling) = (SolverConfig::default(), LabelingConfig::default());

    println!("     q      C  clusters  SVs  BSVs  NMI vs truth");
    let show = |q: f64, c: f64| -> Result<()> {
        let out = svc_cluster_detailed(&data, &dists, q, c, &solver, &labeling)?;
        println!(
            "{q:>6.1} {c:>6.3} {:>9} {:>4} {:>5}  {:.4}",
            out.labeling.n_clusters(),
            out.model.count_role(PointRole::Support),
            out.model.count_role(PointRole::Bounded),
            nmi(&out.labeling, &blobs.labels)?
        );
        Ok(())
    };
    for q in [0.5, 2.0, 8.0, 20.0, 60.0, 200.0] {
        show(q, 1.0)?;
    }
    println!();
    for c in [1.0, 0.1, 0.03, 0.012] {
        show(60.0, c)?;
    }
    Ok(())
}
