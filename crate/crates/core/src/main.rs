use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edsvc::pipeline::{q_sweep, run_pipeline, RunConfig, OUTPUT_DIR_ENV};
use edsvc::{EdsvcConfig, LabelColumn};

#[derive(Parser)]
#[command(name = "edsvc", version, about = "Ensemble-driven support vector clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate q and C, cluster, and write report, labeling, ensemble and scan CSVs.
    Run(Common),
    /// SVC at fixed C over the q grid, scored against ground truth and the ensemble.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Trade-off held fixed during the sweep.
        #[arg(long, default_value_t = 1.0)]
        c_fixed: f64,
    },
}

#[derive(Args)]
struct Common {
    /// Input CSV file.
    input: PathBuf,
    /// Label column: 0-based index or "last". Labels are used for reporting only.
    #[arg(long)]
    label_column: Option<LabelColumn>,
    #[arg(long, env = OUTPUT_DIR_ENV, default_value = "edsvc-out")]
    output_dir: PathBuf,
    /// Directory for cached distance matrices.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of base clusterings.
    #[arg(long, default_value_t = 10)]
    members: usize,
    #[arg(long, default_value_t = 100)]
    n_q: usize,
    #[arg(long, default_value_t = 100)]
    n_c: usize,
    /// C held fixed while scanning q.
    #[arg(long, default_value_t = 1.0)]
    c_init: f64,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, default_value_t = 1e-6)]
    kkt_tolerance: f64,
    #[arg(long, default_value_t = 10)]
    segment_samples: usize,
}

impl Common {
    fn into_config(self) -> RunConfig {
        let mut edsvc = EdsvcConfig {
            master_seed: self.seed,
            m_members: self.members,
            n_q: self.n_q,
            n_c: self.n_c,
            c_init: self.c_init,
            normalize: !self.no_normalize,
            ..EdsvcConfig::default()
        };
        edsvc.svc.solver.kkt_tolerance = self.kkt_tolerance;
        edsvc.svc.labeling.n_segment_samples = self.segment_samples;
        RunConfig {
            input: self.input,
            label_column: self.label_column,
            output_dir: self.output_dir,
            cache_dir: self.cache_dir,
            edsvc,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run(common) => {
            let config = common.into_config();
            run_pipeline(&config).map(|report| print!("{}", report.to_key_values()))
        }
        Command::Sweep { common, c_fixed } => {
            let config = common.into_config();
            q_sweep(&config, c_fixed).map(|rows| {
                println!(
                    "wrote {} rows to {}",
                    rows.len(),
                    config.output_dir.join("sweep.csv").display()
                )
            })
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
