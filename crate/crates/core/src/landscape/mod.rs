//! Position-dependent complex intervalley coupling Δ(x) = Δ_real + iΔ_imag.

mod ensemble;
mod ge;
mod io;
mod stats;
mod step;

pub use ensemble::{derive_seed, sample_ensemble, ValleyModel};
pub use ge::{generate_ge_diffusion, GeDiffusionConfig};
pub use io::{load_landscape, save_landscape, LandscapeFile, LANDSCAPE_FORMAT_VERSION};
pub use stats::{
    ensemble_stats, landscape_stats, EnsembleStats, LandscapeStats, DEFAULT_LVSP_THRESHOLD,
};
pub use step::{generate_step_model, StepModelConfig};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelTag {
    GeDiffusion,
    Step,
    Explicit,
}

/// Uniformly sampled complex intervalley coupling along the device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeProfile {
    x_start: f64,
    spacing: f64,
    delta_re: Vec<f64>,
    delta_im: Vec<f64>,
    pub model_tag: ModelTag,
    pub seed: u64,
    pub config_digest: String,
    /// Generator configuration, kept for provenance.
    pub config: serde_json::Value,
}

/// Δ and its spatial derivative at one position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CouplingSample {
    pub re: f64,
    pub im: f64,
    pub d_re: f64,
    pub d_im: f64,
}

impl CouplingSample {
    pub fn magnitude(&self) -> f64 {
        self.re.hypot(self.im)
    }

    /// E_V = 2|Δ|.
    pub fn splitting(&self) -> f64 {
        2.0 * self.magnitude()
    }

    /// arg Δ in (−π, π]; zero when Δ vanishes.
    /// `e^{iφ_V} = Δ/|Δ|`, or 1 where the coupling vanishes.
    pub fn unit_phase(&self) -> num_complex::Complex64 {
        let m = self.magnitude();
        if m == 0.0 {
            num_complex::Complex64::new(1.0, 0.0)
        } else {
            num_complex::Complex64::new(self.re / m, self.im / m)
        }
    }

    pub fn phase(&self) -> f64 {
        if self.re == 0.0 && self.im == 0.0 {
            0.0
        } else {
            let p = self.im.atan2(self.re);
            if p == -std::f64::consts::PI {
                std::f64::consts::PI
            } else {
                p
            }
        }
    }

    /// dφ/dx; zero at degenerate points.
    pub fn d_phase(&self) -> f64 {
        let m2 = self.re * self.re + self.im * self.im;
        if m2 == 0.0 {
            0.0
        } else {
            (self.re * self.d_im - self.im * self.d_re) / m2
        }
    }
}

impl LandscapeProfile {
    pub fn new(
        x_start: f64,
        spacing: f64,
        delta_re: Vec<f64>,
        delta_im: Vec<f64>,
        model_tag: ModelTag,
        seed: u64,
        config: serde_json::Value,
    ) -> Result<Self> {
        if delta_re.len() != delta_im.len() {
            return Err(invalid("delta_real and delta_imag lengths differ"));
        }
        if delta_re.len() < 2 {
            return Err(invalid("landscape needs at least two grid points"));
        }
        if !(spacing.is_finite() && spacing > 0.0) || !x_start.is_finite() {
            return Err(invalid("grid spacing must be finite and positive"));
        }
        if delta_re.iter().chain(&delta_im).any(|v| !v.is_finite()) {
            return Err(invalid("landscape values must be finite"));
        }
        let config_digest = digest_json(&config);
        Ok(Self {
            x_start,
            spacing,
            delta_re,
            delta_im,
            model_tag,
            seed,
            config_digest,
            config,
        })
    }

    /// Hand-built profile with no generator behind it.
    pub fn explicit(x_start: f64, spacing: f64, delta_re: Vec<f64>, delta_im: Vec<f64>) -> Result<Self> {
        Self::new(
            x_start,
            spacing,
            delta_re,
            delta_im,
            ModelTag::Explicit,
            0,
            serde_json::Value::Null,
        )
    }

    /// Constant coupling `Δ = re + i·im` over `[x_start, x_end]`.
    pub fn flat(x_start: f64, x_end: f64, spacing: f64, re: f64, im: f64) -> Result<Self> {
        let n = ((x_end - x_start) / spacing).round() as usize + 1;
        Self::explicit(x_start, spacing, vec![re; n], vec![im; n])
    }

    pub fn len(&self) -> usize {
        self.delta_re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_re.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x_start(&self) -> f64 {
        self.x_start
    }

    pub fn x_end(&self) -> f64 {
        self.x_start + self.spacing * (self.len() - 1) as f64
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x_start + self.spacing * i as f64
    }

    pub fn delta_real(&self) -> &[f64] {
        &self.delta_re
    }

    pub fn delta_imag(&self) -> &[f64] {
        &self.delta_im
    }

    /// E_V at grid point `i`.
    pub fn splitting_at_index(&self, i: usize) -> f64 {
        2.0 * self.delta_re[i].hypot(self.delta_im[i])
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-9 * self.spacing;
        x >= self.x_start - tol && x <= self.x_end() + tol
    }

    fn check_range(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                x,
                lo: self.x_start,
                hi: self.x_end(),
            })
        }
    }

    /// Cubic Hermite (Catmull-Rom) interpolation of Δ and dΔ/dx.
    pub fn sample(&self, x: f64) -> Result<CouplingSample> {
        self.check_range(x)?;
        Ok(self.sample_unchecked(x))
    }

    pub(crate) fn sample_unchecked(&self, x: f64) -> CouplingSample {
        let n = self.len();
        let u = ((x - self.x_start) / self.spacing).clamp(0.0, (n - 1) as f64);
        let i = (u.floor() as usize).min(n - 2);
        let t = u - i as f64;
        let (re, d_re) = hermite(&self.delta_re, i, t);
        let (im, d_im) = hermite(&self.delta_im, i, t);
        CouplingSample {
            re,
            im,
            d_re: d_re / self.spacing,
            d_im: d_im / self.spacing,
        }
    }

    /// Valley splitting E_V(x) = 2|Δ(x)| (meV).
    pub fn valley_splitting(&self, x: f64) -> Result<f64> {
        Ok(self.sample(x)?.splitting())
    }

    /// Valley phase φ_V(x) = arg Δ(x), zero at degenerate points.
    pub fn valley_phase(&self, x: f64) -> Result<f64> {
        Ok(self.sample(x)?.phase())
    }

    /// Returns a copy with every coupling value scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mut config = serde_json::Map::new();
        config.insert("derived_from".into(), self.config.clone());
        config.insert("source_digest".into(), self.config_digest.clone().into());
        config.insert("scale".into(), factor.into());
        Self::new(
            self.x_start,
            self.spacing,
            self.delta_re.iter().map(|v| v * factor).collect(),
            self.delta_im.iter().map(|v| v * factor).collect(),
            ModelTag::Explicit,
            self.seed,
            serde_json::Value::Object(config),
        )
    }
}

fn slope(y: &[f64], i: usize) -> f64 {
    let n = y.len();
    if i == 0 {
        y[1] - y[0]
    } else if i == n - 1 {
        y[n - 1] - y[n - 2]
    } else {
        0.5 * (y[i + 1] - y[i - 1])
    }
}

/// Value and derivative (per index unit) of the cubic Hermite segment.
fn hermite(y: &[f64], i: usize, t: f64) -> (f64, f64) {
    let (p0, p1) = (y[i], y[i + 1]);
    let (m0, m1) = (slope(y, i), slope(y, i + 1));
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * p0 + h10 * m0 + h01 * p1 + h11 * m1;
    let dv = (6.0 * t2 - 6.0 * t) * p0
        + (3.0 * t2 - 4.0 * t + 1.0) * m0
        + (-6.0 * t2 + 6.0 * t) * p1
        + (3.0 * t2 - 2.0 * t) * m1;
    (v, dv)
}

/// SHA-256 of the canonical JSON serialization.
pub fn digest_json(v: &serde_json::Value) -> String {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(v).expect("json values always serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// A landscape together with the operating point the trajectory oscillates around.
#[derive(Debug, Clone, Copy)]
pub struct Device<'a> {
    pub landscape: &'a LandscapeProfile,
    /// Rest position of the dot (nm); trajectory positions are displacements from it.
    pub center: f64,
}

impl<'a> Device<'a> {
    pub fn new(landscape: &'a LandscapeProfile, center: f64) -> Result<Self> {
        landscape.sample(center)?;
        Ok(Self { landscape, center })
    }

    /// Coupling at displacement `dx` from the operating point.
    pub fn coupling(&self, dx: f64) -> Result<CouplingSample> {
        self.landscape.sample(self.center + dx)
    }

    pub fn splitting_at_center(&self) -> f64 {
        self.landscape.sample_unchecked(self.center).splitting()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> LandscapeProfile {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        LandscapeProfile::explicit(
            0.0,
            0.1,
            xs.iter().map(|x| (0.7 * x).sin() * 1e-2).collect(),
            xs.iter().map(|x| (0.3 * x).cos() * 1e-2).collect(),
        )
        .unwrap()
    }

    #[test]
    fn interpolation_hits_grid_points() {
        let p = profile();
        for i in [0, 7, 25, 49] {
            let s = p.sample(p.x_at(i)).unwrap();
            assert!((s.re - p.delta_real()[i]).abs() < 1e-15);
            assert!((s.im - p.delta_imag()[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn interpolation_derivative_matches_finite_difference() {
        let p = profile();
        for x in [0.13, 1.77, 3.0501, 4.71] {
            let h = 1e-6;
            let a = p.sample(x + h).unwrap();
            let b = p.sample(x - h).unwrap();
            let s = p.sample(x).unwrap();
            assert!(((a.re - b.re) / (2.0 * h) - s.d_re).abs() < 1e-7);
            assert!(((a.im - b.im) / (2.0 * h) - s.d_im).abs() < 1e-7);
        }
    }

    #[test]
    fn out_of_range_is_an_error() {
        let p = profile();
        assert!(matches!(p.sample(-0.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(p.sample(5.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn splitting_and_phase_axis_cases() {
        let z = CouplingSample::default();
        assert_eq!(z.splitting(), 0.0);
        assert_eq!(z.phase(), 0.0);
        let s = CouplingSample { re: 0.0, im: 1e-3, ..Default::default() };
        assert!((s.splitting() - 2e-3).abs() < 1e-18);
        assert!((s.phase() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let s = CouplingSample { re: -1e-3, im: 0.0, ..Default::default() };
        assert_eq!(s.phase(), std::f64::consts::PI);
    }

    #[test]
    fn two_point_profile_is_linear() {
        let p = LandscapeProfile::explicit(0.0, 10.0, vec![0.0, 1e-2], vec![1e-3, 1e-3]).unwrap();
        let s = p.sample(2.5).unwrap();
        assert!((s.re - 2.5e-3).abs() < 1e-15);
        assert!((s.d_re - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_grids() {
        assert!(LandscapeProfile::explicit(0.0, 0.1, vec![0.0], vec![0.0]).is_err());
        assert!(LandscapeProfile::explicit(0.0, 0.1, vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(LandscapeProfile::explicit(0.0, 0.0, vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(LandscapeProfile::explicit(0.0, 0.1, vec![f64::NAN, 1.0], vec![0.0, 0.0]).is_err());
    }
}
