use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinbus::fixtures::make_fixtures;
use spinbus::output::write_outputs;
use spinbus::record::read_jsonl;
use spinbus::{rerun_record, resolve_workers, run_experiment, ExperimentConfig, ExperimentKind, RunError, RunResult};

#[derive(Parser)]
#[command(name = "spinbus", version, about = "Shuttling-based EDSR gate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to SPINBUS_WORKERS, then the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the dense full-scale sweeps.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    DephasingStudy(RunArgs),
    FreqSweep(RunArgs),
    GridSweep(RunArgs),
    MagnetScan(RunArgs),
    Ensemble(RunArgs),
    OptimizeOne(RunArgs),
    CalibrateOne(RunArgs),
    /// Re-runs every record of a records file and reports any mismatch.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Regenerates the pinned landscape fixtures.
    MakeFixtures {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

fn run(kind: ExperimentKind, args: RunArgs) -> RunResult<()> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if args.full_scale && !cfg.full_scale {
        cfg.apply_full_scale();
    }
    let seed = args.seed.unwrap_or(cfg.seed);
    let workers = resolve_workers(args.workers, &cfg)?;
    let out = run_experiment(&cfg, kind, seed, workers)?;
    let dir = args.out.unwrap_or_else(|| cfg.output.dir.clone());
    for path in write_outputs(&dir, &out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn verify(config: PathBuf, records: PathBuf, workers: Option<usize>) -> RunResult<()> {
    let cfg = ExperimentConfig::from_path(&config)?;
    let workers = resolve_workers(workers, &cfg)?;
    let file = std::fs::File::open(&records)?;
    let mut mismatches = 0;
    let all = read_jsonl(std::io::BufReader::new(file))?;
    for r in &all {
        if rerun_record(&cfg, r, workers)? != *r {
            eprintln!("record {} differs on re-run", r.index);
            mismatches += 1;
        }
    }
    println!("{} of {} records reproduced", all.len() - mismatches, all.len());
    if mismatches > 0 {
        return Err(RunError::Numerical(format!("{mismatches} records did not reproduce")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DephasingStudy(a) => run(ExperimentKind::DephasingStudy, a),
        Command::FreqSweep(a) => run(ExperimentKind::FreqSweep, a),
        Command::GridSweep(a) => run(ExperimentKind::GridSweep, a),
        Command::MagnetScan(a) => run(ExperimentKind::MagnetScan, a),
        Command::Ensemble(a) => run(ExperimentKind::Ensemble, a),
        Command::OptimizeOne(a) => run(ExperimentKind::OptimizeOne, a),
        Command::CalibrateOne(a) => run(ExperimentKind::CalibrateOne, a),
        Command::Verify { config, records, workers } => verify(config, records, workers),
        Command::MakeFixtures { out } => make_fixtures(&out).map(|m| {
            println!("{}", serde_json::to_string_pretty(&m).expect("manifest serializes"));
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinbus: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
