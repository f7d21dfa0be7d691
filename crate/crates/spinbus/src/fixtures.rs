//! Pinned landscape fixtures: a Ge-diffusion device with three operating
//! points at prescribed splittings, and a device with a 7 µeV low-splitting
//! point. Seeds are found by a deterministic search from zero.

use std::path::Path;

use serde::{Deserialize, Serialize};
use spinbus_core::landscape::{generate_ge_diffusion, landscape_stats, save_landscape, GeDiffusionConfig, LandscapeProfile};

use crate::error::{config, RunResult};

/// Operating-point splittings of the dephasing study (meV).
pub const DEPHASING_SPLITTINGS: [f64; 3] = [54.53e-3, 23.52e-3, 2.61e-3];
/// Splitting at the LVSP operating point (meV).
pub const LVSP_SPLITTING: f64 = 7e-3;
/// Whole-device mean and spread of E_V the LVSP device should resemble (meV).
const LVSP_DEVICE_MEAN: (f64, f64) = (103e-3, 12e-3);
const LVSP_DEVICE_STD: (f64, f64) = (49e-3, 12e-3);
const SEARCH_LIMIT: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureEntry {
    pub file: String,
    pub seed: u64,
    /// Operating points (nm) and the splitting at each (meV).
    pub centers_nm: Vec<f64>,
    pub splittings_mev: Vec<f64>,
    pub mean_splitting_mev: f64,
    pub std_splitting_mev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dephasing: FixtureEntry,
    pub lvsp: FixtureEntry,
}

impl Manifest {
    pub fn load(path: &Path) -> RunResult<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| config(format!("bad manifest: {e}")))
    }
}

/// Positions in `[lo, hi]` where E_V crosses `target`, refined by bisection.
pub fn crossings(land: &LandscapeProfile, target: f64, lo: f64, hi: f64) -> Vec<f64> {
    let f = |x: f64| land.valley_splitting(x).expect("inside landscape") - target;
    let h = land.spacing();
    let mut out = Vec::new();
    let mut a = lo;
    while a < hi {
        let b = (a + h).min(hi);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            let (mut l, mut r, mut fl) = (a, b, fa);
            for _ in 0..200 {
                let m = 0.5 * (l + r);
                let fm = f(m);
                if fm == 0.0 || r - l < 1e-13 {
                    l = m;
                    r = m;
                    break;
                }
                if fl * fm < 0.0 {
                    r = m;
                } else {
                    l = m;
                    fl = fm;
                }
            }
            out.push(0.5 * (l + r));
        }
        a = b;
    }
    out
}

fn nearest(xs: &[f64], to: f64) -> Option<f64> {
    xs.iter().copied().min_by(|a, b| (a - to).abs().total_cmp(&(b - to).abs()))
}

fn entry(file: &str, seed: u64, land: &LandscapeProfile, centers: Vec<f64>) -> FixtureEntry {
    let stats = landscape_stats(land, 0.015);
    FixtureEntry {
        file: file.to_owned(),
        seed,
        splittings_mev: centers.iter().map(|&c| land.valley_splitting(c).expect("inside")).collect(),
        centers_nm: centers,
        mean_splitting_mev: stats.mean_splitting,
        std_splitting_mev: stats.std_splitting,
    }
}

/// First seed with a crossing of every dephasing splitting in 45–155 nm.
pub fn find_dephasing_device(cfg: &GeDiffusionConfig) -> RunResult<(u64, LandscapeProfile, Vec<f64>)> {
    for seed in 0..SEARCH_LIMIT {
        let land = generate_ge_diffusion(cfg, seed)?;
        let centers: Option<Vec<f64>> = DEPHASING_SPLITTINGS
            .iter()
            .map(|&t| nearest(&crossings(&land, t, 45.0, 155.0), 100.0))
            .collect();
        if let Some(c) = centers {
            return Ok((seed, land, c));
        }
    }
    Err(config("no dephasing fixture seed found"))
}

/// First seed whose E_V statistics resemble the reference device and which
/// has a minimum between 5 and 7 µeV in 60–140 nm. The operating point is the
/// 7 µeV crossing closest to that minimum.
pub fn find_lvsp_device(cfg: &GeDiffusionConfig) -> RunResult<(u64, LandscapeProfile, f64)> {
    for seed in 0..SEARCH_LIMIT {
        let land = generate_ge_diffusion(cfg, seed)?;
        let stats = landscape_stats(&land, 0.015);
        if (stats.mean_splitting - LVSP_DEVICE_MEAN.0).abs() > LVSP_DEVICE_MEAN.1
            || (stats.std_splitting - LVSP_DEVICE_STD.0).abs() > LVSP_DEVICE_STD.1
        {
            continue;
        }
        let (lo, hi) = (60.0, 140.0);
        let i0 = ((lo - land.x_start()) / land.spacing()).ceil() as usize;
        let i1 = ((hi - land.x_start()) / land.spacing()).floor() as usize;
        let (imin, ev) = (i0..=i1)
            .map(|i| (i, land.splitting_at_index(i)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty window");
        if !(5e-3..LVSP_SPLITTING).contains(&ev) {
            continue;
        }
        if let Some(c) = nearest(&crossings(&land, LVSP_SPLITTING, lo, hi), land.x_at(imin)) {
            return Ok((seed, land, c));
        }
    }
    Err(config("no LVSP fixture seed found"))
}

pub const DEPHASING_FILE: &str = "dephasing_device.json";
pub const LVSP_FILE: &str = "lvsp_device.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Searches both fixtures and writes them with a manifest into `dir`.
pub fn make_fixtures(dir: &Path) -> RunResult<Manifest> {
    std::fs::create_dir_all(dir)?;
    let cfg = GeDiffusionConfig::default();
    let (seed, land, centers) = find_dephasing_device(&cfg)?;
    save_landscape(&land, dir.join(DEPHASING_FILE))?;
    let dephasing = entry(DEPHASING_FILE, seed, &land, centers);
    let (seed, land, center) = find_lvsp_device(&cfg)?;
    save_landscape(&land, dir.join(LVSP_FILE))?;
    let lvsp = entry(LVSP_FILE, seed, &land, vec![center]);
    let manifest = Manifest { dephasing, lvsp };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| config(e.to_string()))?;
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings_of_a_linear_ramp() {
        let n = 101;
        let re: Vec<f64> = (0..n).map(|i| 0.5e-3 * i as f64).collect();
        let land = LandscapeProfile::explicit(0.0, 1.0, re, vec![0.0; n]).unwrap();
        // E_V = 2|Δ| = 1e-3 · x.
        let xs = crossings(&land, 0.0314, 0.0, 100.0);
        assert_eq!(xs.len(), 1);
        assert!((xs[0] - 31.4).abs() < 1e-9, "{xs:?}");
    }
}
