use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LandscapeProfile, ModelTag};
use crate::error::{Error, Result};

pub const LANDSCAPE_FORMAT_VERSION: u32 = 1;

/// On-disk landscape document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeFile {
    pub format_version: u32,
    pub model_tag: ModelTag,
    pub seed: u64,
    pub config: serde_json::Value,
    pub x_grid_spacing_nm: f64,
    pub x_start_nm: f64,
    #[serde(rename = "delta_real_meV")]
    pub delta_real_mev: Vec<f64>,
    #[serde(rename = "delta_imag_meV")]
    pub delta_imag_mev: Vec<f64>,
}

impl From<&LandscapeProfile> for LandscapeFile {
    fn from(p: &LandscapeProfile) -> Self {
        Self {
            format_version: LANDSCAPE_FORMAT_VERSION,
            model_tag: p.model_tag,
            seed: p.seed,
            config: p.config.clone(),
            x_grid_spacing_nm: p.spacing(),
            x_start_nm: p.x_start(),
            delta_real_mev: p.delta_real().to_vec(),
            delta_imag_mev: p.delta_imag().to_vec(),
        }
    }
}

impl LandscapeFile {
    pub fn into_profile(self) -> Result<LandscapeProfile> {
        if self.format_version != LANDSCAPE_FORMAT_VERSION {
            return Err(Error::Version {
                found: self.format_version,
                expected: LANDSCAPE_FORMAT_VERSION,
            });
        }
        LandscapeProfile::new(
            self.x_start_nm,
            self.x_grid_spacing_nm,
            self.delta_real_mev,
            self.delta_imag_mev,
            self.model_tag,
            self.seed,
            self.config,
        )
        .map_err(|e| Error::Malformed(e.to_string()))
    }
}

impl LandscapeProfile {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&LandscapeFile::from(self)).expect("landscape serializes")
    }

    /// Parses a landscape document.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: LandscapeFile = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        file.into_profile()
    }
}

pub fn save_landscape(profile: &LandscapeProfile, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, profile.to_json_string())?;
    Ok(())
}

pub fn load_landscape(path: impl AsRef<Path>) -> Result<LandscapeProfile> {
    let text = std::fs::read_to_string(path)?;
    LandscapeProfile::from_json_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{generate_ge_diffusion, GeDiffusionConfig};

    #[test]
    fn round_trip_is_bitwise() {
        let cfg = GeDiffusionConfig { length: 30.0, ..Default::default() };
        let p = generate_ge_diffusion(&cfg, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.json");
        save_landscape(&p, &path).unwrap();
        let q = load_landscape(&path).unwrap();
        assert_eq!(p, q);
        for (a, b) in p.delta_real().iter().zip(q.delta_real()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_file_is_malformed() {
        let p = LandscapeProfile::flat(0.0, 1.0, 0.1, 1e-2, 0.0).unwrap();
        let s = p.to_json_string();
        let cut = &s[..s.len() / 2];
        assert!(matches!(LandscapeProfile::from_json_str(cut), Err(Error::Malformed(_))));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let p = LandscapeProfile::flat(0.0, 1.0, 0.1, 1e-2, 0.0).unwrap();
        let s = p.to_json_string().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(LandscapeProfile::from_json_str(&s), Err(Error::Version { found: 9, .. })));
    }

    #[test]
    fn hand_written_two_point_profile() {
        let s = r#"{"format_version":1,"model_tag":"explicit","seed":0,"config":null,
            "x_grid_spacing_nm":20.0,"x_start_nm":-10.0,
            "delta_real_meV":[0.01,0.03],"delta_imag_meV":[0.0,0.0]}"#;
        let p = LandscapeProfile::from_json_str(s).unwrap();
        assert!((p.valley_splitting(0.0).unwrap() - 0.04).abs() < 1e-15);
    }
}
