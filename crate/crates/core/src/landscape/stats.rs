use serde::{Deserialize, Serialize};

use super::LandscapeProfile;

/// Splitting below which a position counts as a low-valley-splitting point (meV).
pub const DEFAULT_LVSP_THRESHOLD: f64 = 15e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeStats {
    /// E_V at the device center (meV).
    pub center_splitting: f64,
    /// Mean of E_V over the full length.
    pub mean_splitting: f64,
    /// Spatial standard deviation of E_V.
    pub std_splitting: f64,
    pub min_splitting: f64,
    pub min_position: f64,
    /// Positions of the E_V minimum of every connected region below threshold, sorted.
    pub lvsp_positions: Vec<f64>,
}

pub fn landscape_stats(profile: &LandscapeProfile, threshold: f64) -> LandscapeStats {
    let n = profile.len();
    let ev: Vec<f64> = (0..n).map(|i| profile.splitting_at_index(i)).collect();
    let center = 0.5 * (profile.x_start() + profile.x_end());
    let (mean, std) = mean_std(&ev);
    let (imin, &min) = ev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("profiles have at least two points");
    let mut lvsp = Vec::new();
    let mut i = 0;
    while i < n {
        if ev[i] < threshold {
            let start = i;
            while i < n && ev[i] < threshold {
                i += 1;
            }
            let (k, _) = ev[start..i]
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            lvsp.push(profile.x_at(start + k));
        } else {
            i += 1;
        }
    }
    LandscapeStats {
        center_splitting: profile.valley_splitting(center).unwrap_or(f64::NAN),
        mean_splitting: mean,
        std_splitting: std,
        min_splitting: min,
        min_position: profile.x_at(imin),
        lvsp_positions: lvsp,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub devices: usize,
    pub center_mean: f64,
    pub center_std: f64,
    /// Mean over devices of the full-length average E_V.
    pub full_length_mean: f64,
    /// Device-to-device standard deviation of the full-length average E_V.
    pub full_length_std: f64,
    /// Fraction of devices with center E_V below `threshold`.
    pub fraction_center_below: f64,
    pub threshold: f64,
    pub center_splittings: Vec<f64>,
}

pub fn ensemble_stats(profiles: &[LandscapeProfile], threshold: f64) -> EnsembleStats {
    let per: Vec<LandscapeStats> = profiles.iter().map(|p| landscape_stats(p, threshold)).collect();
    let centers: Vec<f64> = per.iter().map(|s| s.center_splitting).collect();
    let means: Vec<f64> = per.iter().map(|s| s.mean_splitting).collect();
    let (center_mean, center_std) = mean_std(&centers);
    let (full_length_mean, full_length_std) = mean_std(&means);
    let below = centers.iter().filter(|c| **c < threshold).count();
    EnsembleStats {
        devices: profiles.len(),
        center_mean,
        center_std,
        full_length_mean,
        full_length_std,
        fraction_center_below: below as f64 / profiles.len().max(1) as f64,
        threshold,
        center_splittings: centers,
    }
}

/// Mean and population standard deviation.
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile_has_zero_spread_and_no_lvsp() {
        let p = LandscapeProfile::flat(0.0, 200.0, 0.1, 0.05, 0.0).unwrap();
        let s = landscape_stats(&p, DEFAULT_LVSP_THRESHOLD);
        assert!(s.std_splitting < 1e-14);
        assert!((s.mean_splitting - 0.1).abs() < 1e-14);
        assert!(s.lvsp_positions.is_empty());
    }

    #[test]
    fn single_dip_reports_one_lvsp() {
        let n = 2001;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        // |Δ| = 0.05 meV with a Gaussian dip to 3.5 µeV (E_V = 7 µeV) at 73.4 nm.
        let mag: Vec<f64> = xs
            .iter()
            .map(|x| 0.05 - (0.05 - 3.5e-3) * (-(x - 73.4f64).powi(2) / 8.0).exp())
            .collect();
        let p = LandscapeProfile::explicit(0.0, 0.1, mag.clone(), vec![0.0; n]).unwrap();
        let s = landscape_stats(&p, DEFAULT_LVSP_THRESHOLD);
        assert_eq!(s.lvsp_positions.len(), 1);
        assert!((s.lvsp_positions[0] - 73.4).abs() < 1e-9);
        assert!((s.min_splitting - 7e-3).abs() < 1e-12);
    }
}
