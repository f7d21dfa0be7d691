//! Aggregates computed from records alone, so they can be rebuilt from a
//! `records.jsonl` file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;
use crate::record::ResultRecord;

/// Infidelity threshold used by every "fraction below" statistic.
pub const THRESHOLD: f64 = 1e-3;
/// Width of the ensemble histogram bins over center E_V (meV).
pub const ENSEMBLE_BIN_WIDTH: f64 = 0.02;
/// Frequencies closer than this to the minimum are excluded from the fringe contrast (GHz).
pub const FRINGE_EXCLUSION: f64 = 1e-3;
/// Splitting above which the magnet-scan calibrated curve is checked for flatness (meV).
pub const LARGE_SPLITTING: f64 = 0.06;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Summary {
    DephasingStudy { curves: Vec<DephasingCurve> },
    FreqSweep { resonances: Vec<Resonance> },
    GridSweep(GridSummary),
    MagnetScan { curves: Vec<MagnetCurve> },
    Ensemble { groups: Vec<EnsembleGroup> },
    OptimizeOne(SingleSummary),
    CalibrateOne(SingleSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingCurve {
    pub kappa_z_mev: f64,
    pub center_nm: f64,
    pub splitting_mev: f64,
    pub db_par_mt_per_nm: Vec<f64>,
    pub t2_star_ns: Vec<f64>,
    pub analytical_min: Vec<f64>,
    pub optimized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub kappa_z_mev: f64,
    pub x0_nm: f64,
    /// Parabola-refined location of the infidelity minimum (GHz).
    pub omega_star_ghz: f64,
    pub min_infidelity: f64,
    /// Standard deviation of the infidelity away from the minimum.
    pub fringe_contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub cells: usize,
    pub fraction_below_pre: f64,
    pub fraction_below_post: f64,
    /// Every cell with `T_g` < 42 ns ends below threshold.
    pub short_gates_all_below: bool,
    /// Every cell with `x₀` > 14 nm ends below threshold.
    pub large_amplitudes_all_below: bool,
    pub worst_post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnetCurve {
    pub model: String,
    pub kappa_z_mev: f64,
    pub positions_nm: Vec<f64>,
    pub splitting_mev: Vec<f64>,
    pub analytical: Vec<f64>,
    pub calibrated: Vec<f64>,
    pub optimized: Vec<f64>,
    pub max_optimized: f64,
    pub analytical_worst_position_nm: f64,
    pub min_splitting_position_nm: f64,
    /// `log10(max/min)` of the calibrated curve where E_V exceeds 60 µeV.
    pub calibrated_log_span_large_splitting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub analytical: usize,
    pub calibrated: usize,
    pub optimized: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub splitting_lo_mev: f64,
    pub devices: usize,
    pub mean_analytical: f64,
    pub mean_calibrated: f64,
    pub mean_optimized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleGroup {
    pub model: String,
    pub kappa_z_mev: f64,
    pub devices: usize,
    pub below_threshold: Counts,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSummary {
    pub analytical: Option<f64>,
    pub calibrated: Option<f64>,
    pub optimized: Option<f64>,
}

pub fn summarize(kind: ExperimentKind, records: &[ResultRecord]) -> Summary {
    match kind {
        ExperimentKind::DephasingStudy => Summary::DephasingStudy { curves: dephasing(records) },
        ExperimentKind::FreqSweep => Summary::FreqSweep { resonances: resonances(records) },
        ExperimentKind::GridSweep => Summary::GridSweep(grid(records)),
        ExperimentKind::MagnetScan => Summary::MagnetScan { curves: magnet(records) },
        ExperimentKind::Ensemble => Summary::Ensemble { groups: ensemble(records) },
        ExperimentKind::OptimizeOne => Summary::OptimizeOne(single(records)),
        ExperimentKind::CalibrateOne => Summary::CalibrateOne(single(records)),
    }
}

/// Groups records by a key, keeping first-appearance order of keys and task
/// order within each group.
fn group_by<K: PartialEq>(records: &[ResultRecord], key: impl Fn(&ResultRecord) -> K) -> Vec<(K, Vec<&ResultRecord>)> {
    let mut groups: Vec<(K, Vec<&ResultRecord>)> = Vec::new();
    for r in records {
        let k = key(r);
        match groups.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r),
            None => groups.push((k, vec![r])),
        }
    }
    groups
}

fn value(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn dephasing(records: &[ResultRecord]) -> Vec<DephasingCurve> {
    group_by(records, |r| (r.coord("kappa_z_mev").to_bits(), r.coord("center_nm").to_bits()))
        .into_iter()
        .map(|(_, rs)| DephasingCurve {
            kappa_z_mev: rs[0].coord("kappa_z_mev"),
            center_nm: rs[0].coord("center_nm"),
            splitting_mev: rs[0].diagnostic("splitting_mev"),
            db_par_mt_per_nm: rs.iter().map(|r| r.coord("db_par_mt_per_nm")).collect(),
            t2_star_ns: rs.iter().map(|r| value(r.t2_star_ns)).collect(),
            analytical_min: rs.iter().map(|r| value(r.analytical)).collect(),
            optimized: rs.iter().map(|r| value(r.optimized)).collect(),
        })
        .collect()
}

/// Vertex of the parabola through the minimum sample and its neighbours;
/// the raw minimum at the range edges.
pub fn refined_minimum(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let i = (0..ys.len()).min_by(|&a, &b| ys[a].total_cmp(&ys[b])).expect("nonempty sweep");
    if i == 0 || i + 1 == ys.len() {
        return (xs[i], ys[i]);
    }
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature > 0.0) {
        return (xs[i], ys[i]);
    }
    // y = y1 + d·(x − x1) + c·(x − x1)(x − x0) with d = d01.
    let xv = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    let yv = y1 + d01 * (xv - x1) + curvature * (xv - x1) * (xv - x0);
    (xv, yv.min(y1))
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn resonances(records: &[ResultRecord]) -> Vec<Resonance> {
    group_by(records, |r| (r.coord("kappa_z_mev").to_bits(), r.coord("x0_nm").to_bits()))
        .into_iter()
        .map(|(_, mut rs)| {
            rs.sort_by(|a, b| a.coord("omega_ghz").total_cmp(&b.coord("omega_ghz")));
            let xs: Vec<f64> = rs.iter().map(|r| r.coord("omega_ghz")).collect();
            let ys: Vec<f64> = rs.iter().map(|r| value(r.analytical)).collect();
            let (omega_star, min) = refined_minimum(&xs, &ys);
            let off: Vec<f64> = xs
                .iter()
                .zip(&ys)
                .filter(|(x, _)| (*x - omega_star).abs() > FRINGE_EXCLUSION)
                .map(|(_, y)| *y)
                .collect();
            Resonance {
                kappa_z_mev: rs[0].coord("kappa_z_mev"),
                x0_nm: rs[0].coord("x0_nm"),
                omega_star_ghz: omega_star,
                min_infidelity: min,
                fringe_contrast: std_dev(&off),
            }
        })
        .collect()
}

fn fraction(n: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        n as f64 / total as f64
    }
}

fn below(v: Option<f64>) -> bool {
    v.is_some_and(|x| x < THRESHOLD)
}

fn grid(records: &[ResultRecord]) -> GridSummary {
    let n = records.len();
    GridSummary {
        cells: n,
        fraction_below_pre: fraction(records.iter().filter(|r| below(r.analytical)).count(), n),
        fraction_below_post: fraction(records.iter().filter(|r| below(r.optimized)).count(), n),
        short_gates_all_below: records.iter().filter(|r| r.coord("tg_ns") < 42.0).all(|r| below(r.optimized)),
        large_amplitudes_all_below: records.iter().filter(|r| r.coord("x0_nm") > 14.0).all(|r| below(r.optimized)),
        worst_post: records.iter().map(|r| value(r.optimized)).fold(0.0, f64::max),
    }
}

fn argmax(xs: &[f64], ys: &[f64]) -> f64 {
    (0..ys.len()).max_by(|&a, &b| ys[a].total_cmp(&ys[b])).map_or(f64::NAN, |i| xs[i])
}

fn magnet(records: &[ResultRecord]) -> Vec<MagnetCurve> {
    group_by(records, |r| (r.label("model").to_owned(), r.coord("kappa_z_mev").to_bits()))
        .into_iter()
        .map(|((model, _), rs)| {
            let positions: Vec<f64> = rs.iter().map(|r| r.coord("position_nm")).collect();
            let splitting: Vec<f64> = rs.iter().map(|r| r.diagnostic("splitting_mev")).collect();
            let analytical: Vec<f64> = rs.iter().map(|r| value(r.analytical)).collect();
            let calibrated: Vec<f64> = rs.iter().map(|r| value(r.calibrated)).collect();
            let optimized: Vec<f64> = rs.iter().map(|r| value(r.optimized)).collect();
            let neg: Vec<f64> = splitting.iter().map(|s| -s).collect();
            let large: Vec<f64> = calibrated
                .iter()
                .zip(&splitting)
                .filter(|(_, s)| **s > LARGE_SPLITTING)
                .map(|(c, _)| *c)
                .collect();
            let span = if large.is_empty() {
                f64::NAN
            } else {
                let hi = large.iter().copied().fold(f64::MIN, f64::max);
                let lo = large.iter().copied().fold(f64::MAX, f64::min);
                (hi / lo).log10()
            };
            MagnetCurve {
                model,
                kappa_z_mev: rs[0].coord("kappa_z_mev"),
                max_optimized: optimized.iter().copied().fold(0.0, f64::max),
                analytical_worst_position_nm: argmax(&positions, &analytical),
                min_splitting_position_nm: argmax(&positions, &neg),
                calibrated_log_span_large_splitting: span,
                positions_nm: positions,
                splitting_mev: splitting,
                analytical,
                calibrated,
                optimized,
            }
        })
        .collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn ensemble(records: &[ResultRecord]) -> Vec<EnsembleGroup> {
    group_by(records, |r| (r.label("model").to_owned(), r.coord("kappa_z_mev").to_bits()))
        .into_iter()
        .map(|((model, _), rs)| {
            let mut bins: BTreeMap<i64, Vec<&ResultRecord>> = BTreeMap::new();
            for r in &rs {
                let b = (r.diagnostic("splitting_mev") / ENSEMBLE_BIN_WIDTH).floor() as i64;
                bins.entry(b).or_default().push(r);
            }
            let histogram = bins
                .into_iter()
                .map(|(b, v)| HistogramBin {
                    splitting_lo_mev: b as f64 * ENSEMBLE_BIN_WIDTH,
                    devices: v.len(),
                    mean_analytical: mean(v.iter().map(|r| value(r.analytical))),
                    mean_calibrated: mean(v.iter().map(|r| value(r.calibrated))),
                    mean_optimized: mean(v.iter().map(|r| value(r.optimized))),
                })
                .collect();
            EnsembleGroup {
                model,
                kappa_z_mev: rs[0].coord("kappa_z_mev"),
                devices: rs.len(),
                below_threshold: Counts {
                    analytical: rs.iter().filter(|r| below(r.analytical)).count(),
                    calibrated: rs.iter().filter(|r| below(r.calibrated)).count(),
                    optimized: rs.iter().filter(|r| below(r.optimized)).count(),
                },
                histogram,
            }
        })
        .collect()
}

fn single(records: &[ResultRecord]) -> SingleSummary {
    let r = records.first();
    SingleSummary {
        analytical: r.and_then(|r| r.analytical),
        calibrated: r.and_then(|r| r.calibrated),
        optimized: r.and_then(|r| r.optimized),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola_vertex_is_exact_for_quadratics() {
        let xs: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (x - 0.437).powi(2) + 0.25).collect();
        let (xv, yv) = refined_minimum(&xs, &ys);
        assert!((xv - 0.437).abs() < 1e-12 && (yv - 0.25).abs() < 1e-12);
        let edge: Vec<f64> = xs.iter().map(|x| *x).collect();
        assert_eq!(refined_minimum(&xs, &edge), (0.0, 0.0));
    }

    #[test]
    fn grid_fractions() {
        let mut rs = Vec::new();
        for (i, (x0, tg, post)) in [(2.0, 50.0, 2e-3), (16.0, 50.0, 1e-4), (2.0, 10.0, 5e-4), (16.0, 10.0, 1e-5)].into_iter().enumerate() {
            let mut r = ResultRecord::new(ExperimentKind::GridSweep, i, "d", 0);
            r.coords.insert("x0_nm".into(), x0);
            r.coords.insert("tg_ns".into(), tg);
            r.analytical = Some(1e-2);
            r.optimized = Some(post);
            rs.push(r);
        }
        let g = grid(&rs);
        assert_eq!(g.fraction_below_post, 0.75);
        assert_eq!(g.fraction_below_pre, 0.0);
        assert!(g.short_gates_all_below && g.large_amplitudes_all_below);
        assert_eq!(g.worst_post, 2e-3);
    }
}
