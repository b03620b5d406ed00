//! The ensemble as a stand-in for ground truth: how candidate partitions of
//! two moons score by ANMI against random-k k-means members, next to their
//! true NMI.
//!
//!     cargo run --release --example ensemble_guidance -- [seed]

use edsvc::datasets::two_moons;
use edsvc::labeling::svc_cluster;
use edsvc::{
    anmi, generate_ensemble, kmeans, nmi, normalize_minmax, pairwise_sq_dists, KMeansConfig, Labeling, LabelingConfig,
    Result, SolverConfig,
};

fn main() -> Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let moons = two_moons(200, 0.05, seed);
    let data = normalize_minmax(&moons.data);
    let dists = pairwise_sq_dists(&data);
    let ensemble = generate_ensemble(&data, 10, seed, &KMeansConfig::default())?;

    println!("ensemble k values: {:?}", ensemble.drawn_k());
    for (i, m) in ensemble.members().iter().enumerate() {
        println!(
            "  member {i}: k = {}  NMI vs truth = {:.3}",
            m.n_clusters(),
            nmi(m, &moons.labels)?
        );
    }

    let mut candidates: Vec<(String, Labeling)> = vec![
        ("ground truth".into(), moons.labels.clone()),
        ("single cluster".into(), Labeling::single_cluster(200)),
        ("k-means k=2".into(), kmeans(&data, 2, 99, &KMeansConfig::default())?),
    ];
    for q in [10.0, 40.0, 150.0] {
        let l = svc_cluster(
            &data,
            &dists,
            q,
            1.0,
            &SolverConfig::default(),
            &LabelingConfig::default(),
        )?;
        candidates.push((format!("SVC q={q} C=1"), l));
    }
    println!("\n{:<18} {:>8} {:>8} {:>8}", "candidate", "clusters", "ANMI", "NMI");
    for (name, l) in &candidates {
        println!(
            "{name:<18} {:>8} {:>8.4} {:>8.4}",
            l.n_clusters(),
            anmi(l, &ensemble)?,
            nmi(l, &moons.labels)?
        );
    }
    Ok(())
}
