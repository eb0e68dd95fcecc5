use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alphasurvey_core::config::RunConfig;
use alphasurvey_core::pipeline::{self, PlanStage};
use alphasurvey_core::{count_threshold, Error, ErrorKind, Verdict};
use clap::{Parser, Subcommand};

/// Coverage planning and simulated alpha surveys for an off-center floor
/// detector.
#[derive(Debug, Parser)]
#[command(name = "alphasurvey", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Random seed; overrides `seed` in the config.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rasterize the [scene] section to cloud.xyz.
    Scene,
    /// Compute per-cell orientation ranges and write partitions.csv.
    Partition,
    /// Build the navigation graph and a coverage plan.
    Plan,
    /// Plan, then simulate a survey and write the heat map.
    Survey {
        /// Prior heat map CSV to compare against.
        #[arg(long, value_name = "FILE")]
        baseline: Option<PathBuf>,
    },
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 1,
        ErrorKind::Planning => 2,
        ErrorKind::Io => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = cli.config.ok_or_else(|| Error::Config("--config <FILE> is required".into()))?;
    let mut cfg = RunConfig::load(&config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = cli.out.or_else(|| cfg.out_path()).unwrap_or_else(|| cfg.base_dir.join("out"));
    match cli.command {
        Command::Scene => scene(&cfg, &out),
        Command::Partition => partition(&cfg, &out),
        Command::Plan => {
            let stage = pipeline::cmd_plan(&cfg, &out)?;
            print_plan(&stage);
            println!("output: {}", out.display());
            Ok(())
        }
        Command::Survey { baseline } => survey(&cfg, &out, baseline.as_deref()),
    }
}

fn scene(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    let (path, cloud) = pipeline::cmd_scene(cfg, out)?;
    println!("points: {}", cloud.len());
    println!("output: {}", path.display());
    Ok(())
}

fn partition(cfg: &RunConfig, out: &Path) -> Result<(), Error> {
    let stage = pipeline::cmd_partition(cfg, out)?;
    let grid = &stage.grid;
    let uncoverable = grid.uncoverable_cells().len();
    println!("cells: {}", grid.spec().cell_count());
    println!("coverable: {}", grid.spec().cell_count() - uncoverable);
    println!("uncoverable: {uncoverable}");
    println!("partitions: {}", grid.partition_count());
    println!("output: {}", out.join(pipeline::PARTITION_FILE).display());
    Ok(())
}

fn print_plan(stage: &PlanStage) {
    let r = &stage.report;
    println!("algorithm: {}", stage.plan.algorithm.as_str());
    println!("nodes: {}", stage.graph.node_count());
    println!("edges: {}", stage.graph.edges().len());
    println!("steps: {}", stage.plan.steps.len());
    println!("coverable: {}", r.coverable_cells);
    println!("covered: {}", r.covered_cells);
    println!("coverage_fraction: {:.6}", r.coverage_fraction);
    println!("uncoverable: {}", r.uncoverable_cells.len());
    println!("unreachable: {}", r.unreachable_cells.len());
    println!("backtracks: {}", r.backtracks);
    println!("path_length_m: {:.3}", r.path_length);
    println!("contamination_violations: {}", r.contamination_violations);
}

fn survey(cfg: &RunConfig, out: &Path, baseline: Option<&Path>) -> Result<(), Error> {
    let stage = pipeline::cmd_survey(cfg, out, baseline)?;
    print_plan(&stage.plan);
    let map = &stage.heatmap;
    println!("velocity_mps: {:.4}", stage.plan.planner.velocity);
    println!("count_threshold_cps: {}", count_threshold(&cfg.detector));
    for v in [Verdict::Clean, Verdict::Contaminated, Verdict::NotSurveyed] {
        println!("{}: {}", v.as_str().to_lowercase(), map.count(v));
    }
    if let Some(diff) = &stage.diff {
        println!("changed_cells: {}", diff.changed().count());
        for ((a, b), n) in &diff.transitions {
            if a != b {
                println!("transition {a}->{b}: {n}");
            }
        }
    }
    println!("output: {}", out.display());
    Ok(())
}
