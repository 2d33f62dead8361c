use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dnlab::harness::{emit_report, run_experiment, ExperimentConfig, Pipeline, RunOptions};
use dnlab::Result;

#[derive(Parser)]
#[command(name = "dnlab", version, about = "Partial Dirichlet-to-Neumann map experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Seed for randomized boundary data.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings applied after the configuration file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward boundary value problem.
    Solve(RunArgs),
    /// Sample linearized partial DN operators over the λ grid.
    Dnmap(RunArgs),
    /// Check the first-order Taylor remainder of the nonlinear map.
    FrechetCheck(RunArgs),
    /// Sweep singular solutions toward the boundary point.
    SingularCheck(RunArgs),
    /// Recover γ(λ) (or γ₁ - γ₂) from boundary measurements.
    ReconstructGamma(RunArgs),
    /// Recover G' and G from boundary measurements.
    ReconstructSemilinear(RunArgs),
    /// Measure stability ratios over a family of law perturbations.
    StabilitySweep(RunArgs),
    /// Summarize finished runs.
    Report {
        /// Run directories.
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Where to write report.txt and plot_data.csv (default: print only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(pipeline: Pipeline, args: RunArgs) -> Result<bool> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::parse(&fs::read_to_string(p)?, &p.display().to_string())?,
        None => ExperimentConfig::default(),
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| dnlab::Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        config.set(k.trim(), v.trim())?;
    }
    config.pipeline = pipeline;
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let out = args
        .out
        .or_else(|| config.out.clone())
        .ok_or_else(|| dnlab::Error::Config("no output directory: pass --out or set 'out'".into()))?;
    let manifest = run_experiment(&config, &out, &RunOptions { workers: args.workers })?;
    for f in &manifest.files {
        println!("{}  {}", f.sha256, out.join(&f.name).display());
    }
    match &manifest.failure {
        Some(f) => {
            eprintln!("error: step '{}' failed: {}", f.step, f.message);
            Ok(false)
        }
        None => Ok(true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => run(Pipeline::Solve, a),
        Command::Dnmap(a) => run(Pipeline::Dnmap, a),
        Command::FrechetCheck(a) => run(Pipeline::FrechetCheck, a),
        Command::SingularCheck(a) => run(Pipeline::SingularCheck, a),
        Command::ReconstructGamma(a) => run(Pipeline::ReconstructGamma, a),
        Command::ReconstructSemilinear(a) => run(Pipeline::ReconstructSemilinear, a),
        Command::StabilitySweep(a) => run(Pipeline::StabilitySweep, a),
        Command::Report { dirs, out } => emit_report(&dirs).and_then(|r| {
            print!("{}", r.text);
            if let Some(o) = out {
                fs::create_dir_all(&o)?;
                fs::write(o.join("report.txt"), &r.text)?;
                fs::write(o.join("plot_data.csv"), r.plot.to_csv())?;
            }
            Ok(r.items.iter().all(|i| i.verdict != dnlab::harness::report::Verdict::Fail))
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
