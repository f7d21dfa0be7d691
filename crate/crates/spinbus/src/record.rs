use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;
use crate::error::{RunError, RunResult};

/// One task's outcome. `(config_digest, seed, index)` identifies the task
/// exactly; re-running it reproduces every number bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: ExperimentKind,
    /// Position of the task in the experiment's task list.
    pub index: usize,
    pub config_digest: String,
    pub seed: u64,
    /// Input coordinates, e.g. `x0_nm`, `tg_ns`, `omega_ghz`, `kappa_z_mev`.
    pub coords: BTreeMap<String, f64>,
    /// Categorical inputs, e.g. the valley model.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    pub analytical: Option<f64>,
    pub calibrated: Option<f64>,
    pub optimized: Option<f64>,
    pub t2_star_ns: Option<f64>,
    /// Auxiliary numbers: iteration counts, calibrated `(ω, T_g)`, local E_V.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
    /// Inner sweep behind a minimum, as `[coordinate, infidelity]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<[f64; 2]>,
}

impl ResultRecord {
    pub fn new(experiment: ExperimentKind, index: usize, config_digest: &str, seed: u64) -> Self {
        Self {
            experiment,
            index,
            config_digest: config_digest.to_owned(),
            seed,
            coords: BTreeMap::new(),
            labels: BTreeMap::new(),
            analytical: None,
            calibrated: None,
            optimized: None,
            t2_star_ns: None,
            diagnostics: BTreeMap::new(),
            series: Vec::new(),
        }
    }

    pub fn coord(&self, name: &str) -> f64 {
        self.coords.get(name).copied().unwrap_or(f64::NAN)
    }

    pub fn label(&self, name: &str) -> &str {
        self.labels.get(name).map(String::as_str).unwrap_or("")
    }

    pub fn diagnostic(&self, name: &str) -> f64 {
        self.diagnostics.get(name).copied().unwrap_or(f64::NAN)
    }
}

pub fn write_jsonl(records: &[ResultRecord], mut w: impl Write) -> RunResult<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| RunError::Numerical(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(r: impl BufRead) -> RunResult<Vec<ResultRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| RunError::Config(format!("bad record: {e}")))?);
    }
    Ok(out)
}
