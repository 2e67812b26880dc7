//! Command-line front end for the mesh-free solver and its reduced-basis
//! experiments.
//!
//! Every subcommand reads an optional JSON config file, applies flag
//! overrides, runs one experiment driver, prints a short summary, and
//! leaves CSV files (and models) in the output directory.  Exit codes:
//! 0 success, 1 runtime failure, 2 usage error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use r2bf::harness::{
    run_bound_check, run_offline, run_online, run_rb_convergence, run_select_nodes,
    run_timing, run_truth_convergence, run_truth_solve, ExperimentConfig,
};
use r2bf::{Error, Result};

#[derive(Parser)]
#[command(
    name = "r2bf",
    version,
    about = "Mesh-free truth solves and certified reduced-basis experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select nodes from candidate clouds and write the pivot-decay traces.
    SelectNodes(CommonArgs),
    /// Solve the truth system against a manufactured solution.
    TruthSolve(CommonArgs),
    /// Sweep truth size against a manufactured solution.
    TruthConvergence(CommonArgs),
    /// Train a reduced model by greedy snapshot selection and save it.
    Offline(CommonArgs),
    /// Run one certified online query against a saved model.
    Online(CommonArgs),
    /// Measure reduced-basis error decay on a held-out parameter grid.
    RbConvergence(CommonArgs),
    /// Time truth solves against online queries through a saved model.
    Timing(CommonArgs),
    /// Validate the certified error bound at random parameters.
    BoundCheck(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; the flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem name: awave2d, diff2d, awave3d, diff3d.
    #[arg(long)]
    problem: Option<String>,
    /// Kernel family: imq, ga, mq, cubic, tps.
    #[arg(long)]
    kernel: Option<String>,
    /// Shape parameter.
    #[arg(long)]
    eps: Option<f64>,
    /// Interior node count.
    #[arg(long)]
    n_interior: Option<usize>,
    /// Boundary node count.
    #[arg(long)]
    n_boundary: Option<usize>,
    /// Stencil size.
    #[arg(long)]
    n_loc: Option<usize>,
    /// Parameter value, e.g. --mu 1.5,0.3
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    mu: Option<Vec<f64>>,
    /// Reduced dimension for online queries.
    #[arg(long)]
    n_rb: Option<usize>,
    /// Basis-size cap for the greedy loop.
    #[arg(long)]
    n_max: Option<usize>,
    /// Greedy stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for randomized sweeps.
    #[arg(long)]
    seed: Option<u64>,
    /// Manufactured solution: trig or peaks.
    #[arg(long)]
    case: Option<String>,
    /// Node counts for the truth convergence sweep, e.g. --n-values 250,500,1000
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// Random parameter samples for the bound check.
    #[arg(long)]
    samples: Option<usize>,
    /// Training grid dimensions, e.g. --train-dims 33,33
    #[arg(long, value_delimiter = ',')]
    train_dims: Option<Vec<usize>>,
    /// Held-out test grid dimensions, e.g. --test-dims 20,20
    #[arg(long, value_delimiter = ',')]
    test_dims: Option<Vec<usize>>,
    /// Truth solves timed by the timing study.
    #[arg(long)]
    timing_truth: Option<usize>,
    /// Online solves timed by the timing study.
    #[arg(long)]
    timing_online: Option<usize>,
    /// Model file path.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn pair<T: Copy>(name: &str, v: Vec<T>) -> Result<[T; 2]> {
    if v.len() != 2 {
        return Err(Error::Config(format!("--{name} takes exactly two values")));
    }
    Ok([v[0], v[1]])
}

impl CommonArgs {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.problem {
            cfg.problem = v;
        }
        if let Some(v) = self.kernel {
            cfg.kernel = v;
        }
        if let Some(v) = self.eps {
            cfg.eps = Some(v);
        }
        if let Some(v) = self.n_interior {
            cfg.n_interior = Some(v);
        }
        if let Some(v) = self.n_boundary {
            cfg.n_boundary = Some(v);
        }
        if let Some(v) = self.n_loc {
            cfg.n_loc = Some(v);
        }
        if let Some(v) = self.mu {
            cfg.mu = Some(pair("mu", v)?);
        }
        if let Some(v) = self.n_rb {
            cfg.n_rb = Some(v);
        }
        if let Some(v) = self.n_max {
            cfg.n_max = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.case {
            cfg.case = v;
        }
        if let Some(v) = self.n_values {
            cfg.n_values = v;
        }
        if let Some(v) = self.samples {
            cfg.samples = v;
        }
        if let Some(v) = self.train_dims {
            cfg.train_dims = pair("train-dims", v)?;
        }
        if let Some(v) = self.test_dims {
            cfg.test_dims = pair("test-dims", v)?;
        }
        if let Some(v) = self.timing_truth {
            cfg.timing_truth = v;
        }
        if let Some(v) = self.timing_online {
            cfg.timing_online = v;
        }
        if let Some(v) = self.model {
            cfg.model = Some(v);
        }
        if let Some(v) = self.out_dir {
            cfg.out_dir = v;
        }
        Ok(cfg)
    }
}

fn list_files(files: &[PathBuf]) -> String {
    files
        .iter()
        .map(|f| f.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SelectNodes(args) => {
            let out = run_select_nodes(&args.into_config()?)?;
            println!(
                "selected {} nodes ({} interior, {} boundary)",
                out.nodes.n(),
                out.nodes.n_interior(),
                out.nodes.n_boundary()
            );
            println!("wrote {}", list_files(&out.files));
        }
        Command::TruthSolve(args) => {
            let out = run_truth_solve(&args.into_config()?)?;
            println!(
                "n = {}: rms error {:.3e}, max error {:.3e} ({:.3} s)",
                out.n, out.rms, out.max_abs, out.seconds
            );
            println!("wrote {}", list_files(&out.files));
        }
        Command::TruthConvergence(args) => {
            let out = run_truth_convergence(&args.into_config()?)?;
            for p in &out.points {
                println!("n = {:6}: rms error {:.3e} ({:.3} s)", p.n, p.rms, p.seconds);
            }
            println!("wrote {}", list_files(&out.files));
        }
        Command::Offline(args) => {
            let out = run_offline(&args.into_config()?)?;
            println!(
                "trained n_rb = {} basis vectors in {:.1} s (final estimate {:.3e})",
                out.model.n_rb(),
                out.seconds,
                out.model.history.last().map_or(f64::NAN, |s| s.max_estimate)
            );
            println!("model saved to {}", out.model_path.display());
            println!("wrote {}", list_files(&out.files));
        }
        Command::Online(args) => {
            let out = run_online(&args.into_config()?)?;
            println!(
                "n_rb = {}: residual {:.3e}, certified estimate {:.3e} ({:.1} us)",
                out.n_use,
                out.query.residual,
                out.query.estimate,
                out.seconds * 1e6
            );
            println!("wrote {}", list_files(&out.files));
        }
        Command::RbConvergence(args) => {
            let out = run_rb_convergence(&args.into_config()?)?;
            for p in &out.points {
                println!(
                    "n = {:3}: max rel error {:.3e}, mean {:.3e}, max estimate {:.3e}",
                    p.n, p.max_rel_error, p.mean_rel_error, p.max_estimate
                );
            }
            println!("wrote {}", list_files(&out.files));
        }
        Command::Timing(args) => {
            let out = run_timing(&args.into_config()?)?;
            println!(
                "truth {:.3e} s/solve (n = {}), online {:.3e} s/query (n_rb = {}): speedup {:.0}x",
                out.truth_seconds, out.n, out.online_seconds, out.n_rb, out.speedup
            );
            println!("wrote {}", list_files(&out.files));
        }
        Command::BoundCheck(args) => {
            let out = run_bound_check(&args.into_config()?)?;
            println!(
                "{} checks: {} violations ({} kernel-norm variant)",
                out.rows.len(),
                out.violations,
                out.violations_s
            );
            println!("wrote {}", list_files(&out.files));
            if out.violations > 0 {
                eprintln!("error: certified bound violated {} times", out.violations);
                std::process::exit(1);
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}
