//! TOML run configuration shared by the CLI commands.
//!
//! ```toml
//! seed = 7
//! output = "out"
//!
//! [group]
//! kind = "shearlet"
//! dimension = 2
//! anisotropy = [0.5]
//!
//! [wavelet.window]
//! shape = "shearlet_box"
//! dimension = 2
//!
//! [signal]
//! kind = "hyperplane_delta"
//! normal = [1.0, 0.0]
//! offset = [0.0, 0.0]
//!
//! [detector]
//! n_regular = 4.0
//!
//! [scan]
//! points_per_axis = 16
//! spacing = 0.0625
//!
//! [verifier]
//! mode = "strong"
//! family = "shearlet_band"
//! epsilon = 0.3
//! radius = 10.0
//! ```

use crate::detector::{direction_grid_2d, point_grid, DetectorConfig};
use crate::error::{Error, Result};
use crate::geometry::FrequencyWindow;
use crate::group::{unit, DilationGroup, DilationGroupSpec};
use crate::transform::{AnalysedObject, GridSpec};
use crate::verifier::{PatchFamily, WindowFamily};
use crate::wavelet::{normalized_wavelet, AdmissibilitySettings, BandlimitedWavelet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub group: DilationGroupSpec,
    pub wavelet: WaveletConfig,
    #[serde(default)]
    pub signal: Option<AnalysedObject>,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub verifier: VerifierConfig,
    #[serde(default)]
    pub synthesize: Option<SynthesizeConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletConfig {
    pub window: FrequencyWindow,
    #[serde(default = "yes")]
    pub normalize: bool,
    #[serde(default)]
    pub admissibility: AdmissibilitySettings,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    Strong,
    Weak,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub points_per_axis: usize,
    pub spacing: f64,
    /// Evenly spaced unit directions (d = 2 only).
    pub directions: usize,
    /// Explicit directions; overrides `directions`.
    pub direction_list: Option<Vec<Vec<f64>>>,
    pub permuted_pass: bool,
    /// Exit with status 1 if any cell is Singular.
    pub assert_regular: bool,
    /// Decay reports written for at most this many Singular cells.
    pub max_reports: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { points_per_axis: 16, spacing: 0.0625, directions: 16, direction_list: None, permuted_pass: false, assert_regular: false, max_reports: 64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifierConfig {
    pub mode: DetectorMode,
    pub family: PatchFamily,
    pub epsilon: f64,
    pub radius: f64,
    /// Probed direction; the orbit base point when absent.
    pub direction: Option<Vec<f64>>,
    /// Strong-mode window; the wavelet window when absent.
    pub window: Option<FrequencyWindow>,
    pub window_family: WindowFamily,
    /// Window index used for the weak-mode envelope fit.
    pub fit_n: f64,
    pub cone_budget: usize,
    pub screen: usize,
    pub max_level: u32,
    pub fit_samples: usize,
    pub fit_inner: bool,
    /// Exponent of the norm-power integral; 2d when absent.
    pub alpha2: Option<f64>,
    pub integral_proposals: usize,
    pub stay_points: usize,
    /// Samples for the cone-set cross-check; skipped when 0.
    pub geometric_budget: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            mode: DetectorMode::Strong,
            family: PatchFamily::Cap,
            epsilon: 0.3,
            radius: 10.0,
            direction: None,
            window: None,
            window_family: WindowFamily::SimilitudeBalls,
            fit_n: 4.0,
            cone_budget: 10_000,
            screen: 1024,
            max_level: 12,
            fit_samples: 10_000,
            fit_inner: true,
            alpha2: None,
            integral_proposals: 20_000,
            stay_points: 100_000,
            geometric_budget: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub points_per_axis: usize,
    pub spacing: f64,
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
}

/// A parsed config with its source text hash.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(Self { config, hash: config_hash(text) })
    }

    /// Key/value lines written at the top of every output.
    pub fn metadata(&self, command: &str) -> Vec<(String, String)> {
        vec![
            ("command".into(), command.into()),
            ("config_sha256".into(), self.hash.clone()),
            ("seed".into(), self.config.seed.to_string()),
            ("version".into(), VERSION.into()),
        ]
    }
}

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = self.group.dimension;
        let group = self.build_group().map_err(|e| Error::Config(format!("group: {e}")))?;
        if self.wavelet.window.dimension != d {
            return bad(format!("wavelet.window: dimension {} differs from group dimension {d}", self.wavelet.window.dimension));
        }
        if let Some(u) = &self.signal {
            u.validate(d).map_err(|e| Error::Config(format!("signal: {e}")))?;
        }
        self.detector.validate().map_err(|e| Error::Config(format!("detector: {e}")))?;
        if self.scan.points_per_axis == 0 || !(self.scan.spacing > 0.0) {
            return bad("scan: points_per_axis and spacing must be positive".into());
        }
        match &self.scan.direction_list {
            Some(list) if list.is_empty() || list.iter().any(|v| v.len() != d) => {
                return bad(format!("scan.direction_list: need nonempty vectors of length {d}"));
            }
            None if d == 2 && self.scan.directions == 0 => return bad("scan.directions must be positive".into()),
            _ => {}
        }
        let v = &self.verifier;
        if !(v.epsilon > 0.0 && v.radius > 0.0 && v.fit_n > 1.0) {
            return bad(format!("verifier: epsilon ({}) and radius ({}) must be positive, fit_n above 1", v.epsilon, v.radius));
        }
        if let Some(a) = v.alpha2 {
            if !(a > 0.0) {
                return bad(format!("verifier.alpha2 must be positive, got {a}"));
            }
        }
        if v.fit_samples == 0 || v.integral_proposals == 0 || v.stay_points == 0 || v.cone_budget == 0 {
            return bad("verifier: budgets must be positive (geometric_budget may be 0)".into());
        }
        let dir = self.direction();
        if dir.len() != d {
            return bad(format!("verifier.direction must have length {d}"));
        }
        if !group.in_open_orbit(&dir) {
            return bad(format!("verifier.direction {dir:?} lies outside the open orbit"));
        }
        if let Some(w) = &v.window {
            if w.dimension != d {
                return bad("verifier.window: wrong dimension".into());
            }
        }
        if let Some(s) = &self.synthesize {
            let origin = s.origin.clone().unwrap_or_else(|| vec![-(s.points_per_axis as f64) * s.spacing / 2.0; d]);
            GridSpec::new(vec![s.points_per_axis; d], s.spacing, origin).map_err(|e| Error::Config(format!("synthesize: {e}")))?;
        }
        Ok(())
    }

    pub fn build_group(&self) -> Result<DilationGroup> {
        DilationGroup::build(self.group.clone())
    }

    pub fn wavelet(&self, group: &DilationGroup) -> Result<BandlimitedWavelet> {
        if self.wavelet.normalize {
            normalized_wavelet(group, self.wavelet.window.clone(), &self.wavelet.admissibility)
        } else {
            Ok(BandlimitedWavelet::new(self.wavelet.window.clone(), self.group.clone()))
        }
    }

    pub fn direction(&self) -> Vec<f64> {
        self.verifier.direction.clone().unwrap_or_else(|| unit(self.group.dimension, 0))
    }

    pub fn strong_window(&self) -> FrequencyWindow {
        self.verifier.window.clone().unwrap_or_else(|| self.wavelet.window.clone())
    }

    pub fn alpha2(&self) -> f64 {
        self.verifier.alpha2.unwrap_or(2.0 * self.group.dimension as f64)
    }

    pub fn scan_points(&self) -> Vec<Vec<f64>> {
        point_grid(self.scan.points_per_axis, self.group.dimension, self.scan.spacing)
    }

    pub fn scan_directions(&self) -> Vec<Vec<f64>> {
        let d = self.group.dimension;
        match &self.scan.direction_list {
            Some(list) => list.clone(),
            None if d == 2 => direction_grid_2d(self.scan.directions),
            None => (0..d).flat_map(|i| [unit(d, i), unit(d, i).iter().map(|x| -x).collect()]).collect(),
        }
    }

    pub fn synthesis_grid(&self) -> Result<GridSpec> {
        let s = self.synthesize.as_ref().ok_or_else(|| Error::Config("missing [synthesize] section".into()))?;
        let d = self.group.dimension;
        let origin = s.origin.clone().unwrap_or_else(|| vec![-(s.points_per_axis as f64) * s.spacing / 2.0; d]);
        GridSpec::new(vec![s.points_per_axis; d], s.spacing, origin)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHEARLET: &str = r#"
seed = 3
[group]
kind = "shearlet"
dimension = 2
anisotropy = [0.5]
[wavelet.window]
shape = "shearlet_box"
dimension = 2
[signal]
kind = "point_mass"
x0 = [0.0, 0.0]
[verifier]
family = "shearlet_band"
"#;

    #[test]
    fn parses_and_hashes() {
        let c = LoadedConfig::from_text(SHEARLET).unwrap();
        assert_eq!(c.config.seed, 3);
        assert_eq!(c.hash.len(), 64);
        assert_eq!(c.hash, config_hash(SHEARLET));
        assert_eq!(c.config.verifier.mode, DetectorMode::Strong);
        assert_eq!(c.config.alpha2(), 4.0);
        assert_eq!(c.config.scan_directions().len(), 16);
        let m = c.metadata("probe");
        assert!(m.iter().any(|(k, v)| k == "version" && v == VERSION));
    }

    #[test]
    fn negative_scale_rejected() {
        let text = SHEARLET.replace("[verifier]", "[verifier]\nradius = -1.0");
        assert!(matches!(LoadedConfig::from_text(&text), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_field_reports_location() {
        let text = SHEARLET.replace("seed = 3", "seed = 3\nsede = 4");
        let msg = LoadedConfig::from_text(&text).unwrap_err().to_string();
        assert!(msg.contains("sede"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let text = SHEARLET.replace("[wavelet.window]\nshape = \"shearlet_box\"\ndimension = 2", "[wavelet.window]\nshape = \"shearlet_box\"\ndimension = 3");
        assert!(LoadedConfig::from_text(&text).is_err());
    }
}
