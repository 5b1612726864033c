//! Search configuration.
//!
//! Every field can be set from a TOML key-value file whose keys match the
//! field names below; missing keys fall back to [`SearchConfig::default`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How each score stream is normalized before the weighted fusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `(x - mean) / (std + eps)`; fused values are unbounded.
    #[default]
    Zscore,
    /// Z-scores rescaled to `[0, 1]` per stream before weighting.
    Minmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Weight of the subtitle stream; the object stream gets `1 - text_weight`.
    pub text_weight: f64,
    /// Similarity threshold above which soft-threshold amplification kicks in.
    pub sim_threshold: f64,
    /// Soft-threshold amplification factor.
    pub amplification: f64,
    /// Segments whose enhanced similarity does not exceed this are ignored.
    pub segment_threshold: f64,
    /// Temporal extension radius in seconds.
    pub extension_radius_s: f64,
    /// Minimum detection confidence for a target to count as found.
    pub detection_threshold: f64,
    /// Total number of frames the detector may examine.
    pub frame_budget: usize,
    /// Cap on the batch grid side; a batch holds at most `max_grid_side²` frames.
    pub max_grid_side: usize,
    /// Ignore `max_grid_side` and size batches as `floor(sqrt(remaining))²`.
    pub uncapped_grid: bool,
    pub top_k: usize,
    pub znorm_epsilon: f64,
    pub normalization: Normalization,
    #[serde(with = "seed_repr")]
    pub rng_seed: u64,
}

/// TOML integers are signed 64-bit, so seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, ser: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*seed) {
            Ok(v) => ser.serialize_i64(v),
            Err(_) => ser.serialize_str(&seed.to_string()),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<u64, D::Error> {
        match Repr::deserialize(de)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(s) => s.trim().parse().map_err(de::Error::custom),
        }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            text_weight: 0.5,
            sim_threshold: 0.5,
            amplification: 2.0,
            segment_threshold: 0.2,
            extension_radius_s: 2.0,
            detection_threshold: 0.5,
            frame_budget: 128,
            max_grid_side: 8,
            uncapped_grid: false,
            top_k: 4,
            znorm_epsilon: 1e-6,
            normalization: Normalization::Zscore,
            rng_seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.text_weight) {
            return Err(Error::Config(format!(
                "text_weight must lie in [0, 1], got {}",
                self.text_weight
            )));
        }
        let finite = [
            ("sim_threshold", self.sim_threshold),
            ("amplification", self.amplification),
            ("segment_threshold", self.segment_threshold),
            ("extension_radius_s", self.extension_radius_s),
            ("detection_threshold", self.detection_threshold),
            ("znorm_epsilon", self.znorm_epsilon),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {value}")));
            }
        }
        if self.extension_radius_s < 0.0 {
            return Err(Error::Config(
                "extension_radius_s must be non-negative".into(),
            ));
        }
        if self.znorm_epsilon < 0.0 {
            return Err(Error::Config("znorm_epsilon must be non-negative".into()));
        }
        if self.frame_budget == 0 {
            return Err(Error::Config("frame_budget must be at least 1".into()));
        }
        if self.max_grid_side == 0 {
            return Err(Error::Config("max_grid_side must be at least 1".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(raw: &str) -> Result<Self> {
        let cfg: SearchConfig =
            toml::from_str(raw).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SearchConfig always serializes")
    }

    /// The grid-side cap in effect; unbounded when `uncapped_grid` is set.
    pub fn effective_max_grid_side(&self) -> usize {
        if self.uncapped_grid {
            usize::MAX
        } else {
            self.max_grid_side
        }
    }
}
