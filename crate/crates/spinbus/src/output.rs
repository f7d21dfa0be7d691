//! Files written for a run: `records.jsonl`, `summary.json`, one CSV matrix
//! per 2-D sweep, and the pulse and optimizer trace of single runs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::{RunError, RunResult};
use crate::record::{write_jsonl, ResultRecord};
use crate::runner::RunOutput;
use crate::summary::Summary;

fn csv_err(e: csv::Error) -> RunError {
    RunError::Io(std::io::Error::other(e))
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Sorted distinct values of a coordinate.
fn axis(records: &[&ResultRecord], key: &str) -> Vec<f64> {
    let mut v: Vec<f64> = records.iter().map(|r| r.coord(key)).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Matrix with one row per `row_key` value and one column per `col_key` value.
fn write_matrix(
    path: &Path,
    records: &[&ResultRecord],
    row_key: &str,
    col_key: &str,
    value: impl Fn(&ResultRecord) -> Option<f64>,
) -> RunResult<()> {
    let rows = axis(records, row_key);
    let cols = axis(records, col_key);
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec![format!("{row_key}\\{col_key}")];
    header.extend(cols.iter().map(|c| fmt(*c)));
    w.write_record(&header).map_err(csv_err)?;
    for &rv in &rows {
        let mut line = vec![fmt(rv)];
        for &cv in &cols {
            let cell = records
                .iter()
                .find(|r| r.coord(row_key) == rv && r.coord(col_key) == cv)
                .and_then(|r| value(r))
                .map_or_else(String::new, fmt);
            line.push(cell);
        }
        w.write_record(&line).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> RunResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt(*v))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn tag(v: f64) -> String {
    format!("{v:e}").replace('-', "m")
}

/// Writes every output file into `dir` and returns their paths.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> RunResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("records.jsonl");
    write_jsonl(&out.records, BufWriter::new(File::create(&path)?))?;
    written.push(path);
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&out.summary).map_err(|e| RunError::Numerical(e.to_string()))?;
    fs::write(&path, text)?;
    written.push(path);

    let all: Vec<&ResultRecord> = out.records.iter().collect();
    match &out.summary {
        Summary::GridSweep(_) => {
            for (name, pre) in [("grid_pre.csv", true), ("grid_post.csv", false)] {
                let path = dir.join(name);
                write_matrix(&path, &all, "tg_ns", "x0_nm", |r| if pre { r.analytical } else { r.optimized })?;
                written.push(path);
            }
        }
        Summary::FreqSweep { .. } => {
            for kappa in axis(&all, "kappa_z_mev") {
                let rs: Vec<&ResultRecord> = all.iter().copied().filter(|r| r.coord("kappa_z_mev") == kappa).collect();
                let path = dir.join(format!("freq_kappa_{}.csv", tag(kappa)));
                write_matrix(&path, &rs, "omega_ghz", "x0_nm", |r| r.analytical)?;
                written.push(path);
            }
        }
        Summary::MagnetScan { curves } => {
            for c in curves {
                let path = dir.join(format!("magnet_{}_kappa_{}.csv", c.model, tag(c.kappa_z_mev)));
                let rows = (0..c.positions_nm.len())
                    .map(|i| vec![c.positions_nm[i], c.splitting_mev[i], c.analytical[i], c.calibrated[i], c.optimized[i]]);
                write_table(&path, &["position_nm", "splitting_mev", "analytical", "calibrated", "optimized"], rows)?;
                written.push(path);
            }
        }
        Summary::Ensemble { groups } => {
            for g in groups {
                let path = dir.join(format!("ensemble_{}_kappa_{}.csv", g.model, tag(g.kappa_z_mev)));
                let rows = g.histogram.iter().map(|b| {
                    vec![b.splitting_lo_mev, b.devices as f64, b.mean_analytical, b.mean_calibrated, b.mean_optimized]
                });
                write_table(&path, &["splitting_lo_mev", "devices", "mean_analytical", "mean_calibrated", "mean_optimized"], rows)?;
                written.push(path);
            }
        }
        Summary::DephasingStudy { curves } => {
            let path = dir.join("dephasing.csv");
            let rows = curves.iter().flat_map(|c| {
                (0..c.db_par_mt_per_nm.len()).map(move |i| {
                    vec![c.kappa_z_mev, c.center_nm, c.splitting_mev, c.db_par_mt_per_nm[i], c.t2_star_ns[i], c.analytical_min[i], c.optimized[i]]
                })
            });
            write_table(
                &path,
                &["kappa_z_mev", "center_nm", "splitting_mev", "db_par_mt_per_nm", "t2_star_ns", "analytical_min", "optimized"],
                rows,
            )?;
            written.push(path);
        }
        Summary::OptimizeOne(_) | Summary::CalibrateOne(_) => {
            if let Some(a) = out.artifacts.first() {
                if let Some(pulse) = &a.pulse {
                    let path = dir.join("pulse.json");
                    pulse.save(&path)?;
                    written.push(path);
                }
                if let Some(trace) = &a.trace {
                    let path = dir.join("trace.jsonl");
                    trace.write_jsonl(BufWriter::new(File::create(&path)?))?;
                    written.push(path);
                }
            }
        }
    }
    Ok(written)
}
