use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use caplab_cli::config::{FieldSpec, RunConfig};
use caplab_cli::{run_construct, run_cover, run_functional, run_kernel, run_verify, Report, Status};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "caplab", version, about = "Capsule constructions, coverings and kernel checks for steady flows")]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// CSV of points with header `x,y,z`.
    #[arg(long, global = true)]
    points: Option<PathBuf>,
    /// Preset name or path to a `.vf3d` grid file.
    #[arg(long, global = true)]
    field: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite.
    Verify {
        /// Reduced sample counts.
        #[arg(long)]
        quick: bool,
    },
    /// Construct a capsule at every point.
    Construct,
    /// Select a disjoint subfamily and certify coverage.
    Cover {
        /// Capsule family, or the capsules.json written by `construct`.
        #[arg(long)]
        capsules: PathBuf,
    },
    /// Line integrals, thresholds and competitor exponents.
    Functional,
    /// Tabulate the drift-Poisson kernel and its residuals.
    Kernel,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(p) = &cli.points {
        cfg.points.csv = Some(p.clone());
    }
    if let Some(f) = &cli.field {
        cfg.field = FieldSpec::from_arg(f);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print(report: &Report) {
    for r in &report.records {
        let tag = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Recorded => "rec ",
        };
        println!("{tag}  {:<32} [{}]", r.name, r.anchor);
    }
    let s = report.summary;
    println!(
        "{}: {} passed, {} failed, {} recorded -> {}",
        report.command,
        s.passed,
        s.failed,
        s.recorded,
        report.config.out.display()
    );
}

fn run() -> Result<Report> {
    let cli = Cli::parse();
    let mut cfg = load(&cli)?;
    match &cli.command {
        Command::Verify { quick } => {
            cfg.verify.quick |= quick;
            run_verify(&cfg)
        }
        Command::Construct => run_construct(&cfg),
        Command::Cover { capsules } => run_cover(&cfg, capsules),
        Command::Functional => run_functional(&cfg),
        Command::Kernel => run_kernel(&cfg),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(report) => {
            print(&report);
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(101)
        }
    }
}
