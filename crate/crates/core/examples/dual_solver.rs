//! Solve the sphere dual on a small noisy blob and inspect the result:
//! multipliers, point roles, radius, and how close the solution is to KKT.
//!
//!     cargo run --release --example dual_solver -- [q] [C]

use edsvc::datasets::gaussian_blobs;
use edsvc::svc::{kkt_residual, solve_wolfe_dual_traced};
use edsvc::{pairwise_sq_dists, PointRole, Result, SolverConfig};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().ok());
    let q = args.next().flatten().unwrap_or(2.0);
    let c = args.next().flatten().unwrap_or(0.1);

    let blob = gaussian_blobs(&[[0.0, 0.0]], 30, 0.5, 3);
    let dists = pairwise_sq_dists(&blob.data);
    let (model, trace) = solve_wolfe_dual_traced(&dists, q, c, &SolverConfig::default())?;

    println!("q = {q}, C = {c}, N = {}", blob.data.n_points());
    println!(
        "W = {:.10}  R² = {:.10}  iterations = {}",
        model.dual_objective(),
        model.sq_radius(),
        model.iterations()
    );
    println!(
        "W after each sweep: {:?}",
        trace.iter().map(|w| format!("{w:.6}")).collect::<Vec<_>>()
    );
    println!(
        "SV = {}  BSV = {}  interior = {}",
        model.count_role(PointRole::Support),
        model.count_role(PointRole::Bounded),
        model.count_role(PointRole::Interior)
    );
    println!("KKT residual = {:.2e}", kkt_residual(&model, &dists));
    println!("\n  i        x        y        β      R²(xᵢ)  role");
    for i in 0..blob.data.n_points() {
        let r = blob.data.row(i);
        let ri = model.sq_radius_with(|j| dists.get(i, j));
        if model.beta()[i] > 0.0 {
            println!(
                "{i:>3} {:>8.3} {:>8.3} {:>8.5} {:>10.6}  {:?}",
                r[0],
                r[1],
                model.beta()[i],
                ri,
                model.roles()[i]
            );
        }
    }
    Ok(())
}
