//! File in, files out: the same run the `edsvc run` command performs, with the
//! distance matrix cached next to the outputs so a second run skips it.
//!
//!     cargo run --release --example csv_pipeline -- [input.csv] [out_dir]
//!
//! Without arguments the bundled Wine file is used, with its last column as
//! labels for reporting.

use edsvc::pipeline::{run_pipeline, RunConfig};
use edsvc::{LabelColumn, Result};

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let bundled = concat!(env!("CARGO_MANIFEST_DIR"), "/data/wine.csv").to_string();
    let input = args.next().unwrap_or(bundled);
    let out = args.next().unwrap_or_else(|| "edsvc-out".into());

    let mut cfg = RunConfig::new(&input, &out);
    cfg.label_column = Some(LabelColumn::Last);
    cfg.cache_dir = Some(std::path::Path::new(&out).join("cache"));

    for attempt in ["first run", "second run (cached distances)"] {
        let report = run_pipeline(&cfg).map_err(|e| e.source)?;
        println!(
            "{attempt}: distances took {:.3}s",
            report.timings.distances.as_secs_f64()
        );
        if attempt.starts_with("second") {
            print!("{}", report.to_key_values());
        }
    }
    println!("artifacts in {out}/");
    Ok(())
}
