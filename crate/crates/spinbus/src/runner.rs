use log::info;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{config, RunError, RunResult};
use crate::experiments::{Artifacts, Context, Task};
use crate::record::ResultRecord;
use crate::summary::{summarize, Summary};

pub struct RunOutput {
    pub records: Vec<ResultRecord>,
    /// Index-aligned with `records`; only single-run experiments fill it.
    pub artifacts: Vec<Artifacts>,
    pub summary: Summary,
}

/// Worker count: explicit value, then `SPINBUS_WORKERS`, then the config,
/// then the number of available CPUs.
pub fn resolve_workers(cli: Option<usize>, cfg: &ExperimentConfig) -> RunResult<usize> {
    let env = match std::env::var("SPINBUS_WORKERS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| config(format!("SPINBUS_WORKERS={v} is not a count")))?),
        Err(_) => None,
    };
    let n = cli
        .or(env)
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(config("worker count must be at least 1"));
    }
    Ok(n)
}

fn check_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> RunResult<()> {
    match cfg.experiment {
        Some(k) if k != kind => Err(config(format!("config is for {k}, not {kind}"))),
        _ => Ok(()),
    }
}

fn execute(ctx: &Context, jobs: &[(usize, Task)], workers: usize) -> RunResult<Vec<(ResultRecord, Artifacts)>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Numerical(format!("worker pool: {e}")))?;
    let total = jobs.len();
    // Results are collected in task order regardless of completion order.
    pool.install(|| {
        jobs.par_iter()
            .map(|&(i, task)| {
                let out = ctx.run(i, task)?;
                info!("{} task {}/{} done", ctx.kind, i + 1, total);
                Ok((out.record, out.artifacts))
            })
            .collect()
    })
}

pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind, seed: u64, workers: usize) -> RunResult<RunOutput> {
    check_kind(cfg, kind)?;
    let ctx = Context::new(cfg, kind, seed)?;
    let jobs: Vec<(usize, Task)> = ctx.tasks()?.into_iter().enumerate().collect();
    info!("{kind}: {} tasks on {workers} workers, config digest {}", jobs.len(), ctx.digest);
    let (records, artifacts): (Vec<_>, Vec<_>) = execute(&ctx, &jobs, workers)?.into_iter().unzip();
    let summary = summarize(kind, &records);
    Ok(RunOutput { records, artifacts, summary })
}

/// Re-runs the task behind `record`. The config must hash to the recorded digest.
pub fn rerun_record(cfg: &ExperimentConfig, record: &ResultRecord, workers: usize) -> RunResult<ResultRecord> {
    let ctx = Context::new(cfg, record.experiment, record.seed)?;
    if ctx.digest != record.config_digest {
        return Err(config("config digest does not match the record"));
    }
    let task = *ctx
        .tasks()?
        .get(record.index)
        .ok_or_else(|| config(format!("record index {} out of range", record.index)))?;
    let mut out = execute(&ctx, &[(record.index, task)], workers)?;
    Ok(out.remove(0).0)
}
