//! Wine and Breast Cancer runs compared against the base clusterings.
//!
//!     cargo run --release --example uci_benchmarks -- [wine|bc|all] [n_seeds]

use std::time::Instant;

use edsvc::datasets::{breast_cancer, wine};
use edsvc::{edsvc, nmi, DataMatrix, EdsvcConfig, GroundTruthLabels, Result};

/// EDSVC NMI and mean base-clustering NMI against the ground truth.
pub fn benchmark(data: &DataMatrix, truth: &GroundTruthLabels, seed: u64) -> Result<(f64, f64)> {
    let cfg = EdsvcConfig {
        master_seed: seed,
        ..EdsvcConfig::default()
    };
    let truth = truth.to_labeling();
    let result = edsvc(data, &cfg)?;
    let final_nmi = nmi(&result.final_labeling, &truth)?;
    let base: Vec<f64> = result
        .ensemble
        .members()
        .iter()
        .map(|m| nmi(m, &truth))
        .collect::<Result<_>>()?;
    println!(
        "    seed {seed}: q̂ = {:.4}  Ĉ = {:.4}  clusters = {:2}  NMI = {:.3}  mean base NMI = {:.3}",
        result.q_hat,
        result.c_hat,
        result.final_labeling.n_clusters(),
        final_nmi,
        base.iter().sum::<f64>() / base.len() as f64
    );
    Ok((final_nmi, base.iter().sum::<f64>() / base.len() as f64))
}

fn main() -> Result<()> {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    let n_seeds: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(3);
    type Loader = fn() -> Result<(DataMatrix, GroundTruthLabels)>;
    let sets: Vec<(&str, Loader)> = vec![("wine", wine), ("bc", breast_cancer)];
    for (name, load) in sets {
        if which != "all" && which != name {
            continue;
        }
        let (data, truth) = load()?;
        println!(
            "{name} ({} x {}, {} classes)",
            data.n_points(),
            data.n_dims(),
            truth.n_classes()
        );
        let start = Instant::now();
        for seed in 0..n_seeds {
            benchmark(&data, &truth, seed)?;
        }
        println!("    {:.1}s", start.elapsed().as_secs_f64());
    }
    Ok(())
}
