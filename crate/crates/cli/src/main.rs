use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use streaming_sdp::instance::InstanceKind;
use streaming_sdp::ipm::SolverConfig;
use streaming_sdp_cli::{
    cmd_check_sketch, cmd_gen, cmd_info, cmd_solve, to_json, CheckSketchOptions, SolveOptions,
};

#[derive(Parser)]
#[command(name = "streaming-sdp", version, about = "Streaming SDP solver with a sketched Newton method")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated instance with a strictly feasible y0.
    Gen {
        #[arg(long)]
        n: usize,
        /// Number of constraints (max-cut instances always have m = n).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value = "random")]
        kind: InstanceKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an instance and print the run report.
    Solve(SolveArgs),
    /// Compare sketched and exact Hessians at the centered initial point.
    CheckSketch {
        path: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        sketch_eps: f64,
        #[arg(long)]
        sketch_delta: Option<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        sketch_size: Option<usize>,
        /// Sample every coordinate exactly once.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Print instance norms and check the initial dual point.
    Info { path: PathBuf },
}

#[derive(Args)]
struct SolveArgs {
    path: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    eta0: f64,
    #[arg(long)]
    sketch_size: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    sketch_eps: f64,
    #[arg(long)]
    sketch_delta: Option<f64>,
    #[arg(long)]
    exact_hessian: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Bound on ‖X*‖ used in the reported infeasibility bound.
    #[arg(long)]
    r_hint: Option<f64>,
    /// Draw a fresh sketch for every Newton system.
    #[arg(long)]
    resample_sketch: bool,
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Include wall time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

fn run(cli: Cli) -> streaming_sdp::Result<()> {
    match cli.command {
        Command::Gen {
            n,
            m,
            kind,
            seed,
            out,
        } => {
            let summary = cmd_gen(n, m, kind, seed, &out)?;
            println!("{}", to_json(&summary));
        }
        Command::Solve(a) => {
            let config = SolverConfig {
                eps: a.eps,
                eta0: a.eta0,
                sketch_eps: a.sketch_eps,
                sketch_delta: a.sketch_delta,
                sketch_size: a.sketch_size,
                exact_hessian: a.exact_hessian,
                rng_seed: a.seed,
                r_hint: a.r_hint,
                max_iters: a.max_iters,
                resample_sketch: a.resample_sketch,
                ..SolverConfig::default()
            };
            let opts = SolveOptions {
                trace: a.trace,
                report: a.report,
                timing: a.timing,
            };
            let report = cmd_solve(&a.path, config, &opts)?;
            println!("{}", to_json(&report));
        }
        Command::CheckSketch {
            path,
            sketch_eps,
            sketch_delta,
            trials,
            seed,
            sketch_size,
            exhaustive,
        } => {
            let opts = CheckSketchOptions {
                eps_h: sketch_eps,
                trials,
                seed,
                sketch_size,
                sketch_delta,
                exhaustive,
            };
            println!("{}", to_json(&cmd_check_sketch(&path, &opts)?));
        }
        Command::Info { path } => {
            for line in cmd_info(&path)?.lines() {
                println!("{line}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
