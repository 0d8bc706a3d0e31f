use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, Violation};
use crate::natocc::NatOccConfig;
use crate::randocc::RandOccConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Natocc,
    Randocc,
    Mix,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::Natocc => "natocc",
            Pipeline::Randocc => "randocc",
            Pipeline::Mix => "mix",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub pipeline: Pipeline,
    /// Relative weight of `natocc` and `randocc` per sample in mix mode.
    pub mix_weights: BTreeMap<String, f64>,
    pub count: u64,
    pub global_seed: u64,
    pub workers: usize,
    pub faces_dir: PathBuf,
    pub occluders_dir: PathBuf,
    pub textures_dir: PathBuf,
    pub output_dir: PathBuf,
    /// External command run once per written image, with the image path
    /// appended to these arguments. Empty disables the hook.
    pub post_process_command: Vec<String>,
    pub natocc: NatOccConfig,
    pub randocc: RandOccConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            pipeline: Pipeline::Natocc,
            // one natocc set per half randocc set
            mix_weights: BTreeMap::from([("natocc".into(), 2.0), ("randocc".into(), 1.0)]),
            count: 1,
            global_seed: 0,
            workers: 1,
            faces_dir: "faces".into(),
            occluders_dir: "occluders".into(),
            textures_dir: "textures".into(),
            output_dir: "output".into(),
            post_process_command: Vec::new(),
            natocc: NatOccConfig::default(),
            randocc: RandOccConfig::default(),
        }
    }
}

impl GenerationConfig {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if self.count == 0 {
            v.push(Violation::new("count", "must be >= 1"));
        }
        if self.workers == 0 {
            v.push(Violation::new("workers", "must be >= 1"));
        }
        for (name, w) in &self.mix_weights {
            if !matches!(name.as_str(), "natocc" | "randocc") {
                v.push(Violation::new(format!("mix_weights.{name}"), "unknown pipeline"));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                v.push(Violation::new(format!("mix_weights.{name}"), "weight must be >= 0"));
            }
        }
        if self.post_process_command.first().is_some_and(|c| c.trim().is_empty()) {
            v.push(Violation::new("post_process_command", "program name must not be empty"));
        }
        if self.pipeline == Pipeline::Mix && self.mix_weight(Pipeline::Natocc) + self.mix_weight(Pipeline::Randocc) <= 0.0 {
            v.push(Violation::new("mix_weights", "weights must have a positive sum"));
        }
        v.extend(self.natocc.violations("natocc."));
        v.extend(self.randocc.violations("randocc."));
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    pub fn mix_weight(&self, p: Pipeline) -> f64 {
        self.mix_weights.get(p.as_str()).copied().unwrap_or(0.0)
    }

    /// Exact TOML text written next to the outputs.
    pub fn snapshot(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidInput(format!("config cannot be serialized: {e}")))
    }

    /// Snapshot without the execution-only settings (`workers`,
    /// `output_dir`), which cannot influence any output byte.
    pub fn identity_snapshot(&self) -> Result<String> {
        let mut t = toml::Table::try_from(self)
            .map_err(|e| Error::InvalidInput(format!("config cannot be serialized: {e}")))?;
        for key in EXECUTION_ONLY {
            t.remove(key);
        }
        Ok(t.to_string())
    }

    /// Digest stamped into every manifest row.
    pub fn hash(&self) -> Result<String> {
        Ok(config_hash(&self.identity_snapshot()?))
    }

    pub fn from_snapshot(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config snapshot: {e}")))
    }
}

const EXECUTION_ONLY: [&str; 2] = ["workers", "output_dir"];

/// Lowercase hex SHA-256 of a config snapshot.
pub fn config_hash(snapshot: &str) -> String {
    hex::encode(Sha256::digest(snapshot.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_documented() {
        let c = GenerationConfig::default();
        assert!(c.violations().is_empty(), "{:?}", c.violations());
        assert_eq!(c.natocc.scale_range, [0.5, 1.0]);
        assert_eq!(c.randocc.alpha_range, [0.5, 0.8]);
        assert_eq!(c.randocc.transparency_prob, 0.30);
    }

    #[test]
    fn snapshot_round_trips() {
        let mut c = GenerationConfig { pipeline: Pipeline::Mix, global_seed: 123_456_789, count: 42, ..Default::default() };
        c.natocc.category_weights.insert("hand".into(), 0.7);
        let text = c.snapshot().unwrap();
        assert_eq!(GenerationConfig::from_snapshot(&text).unwrap(), c);
        assert_eq!(c.hash().unwrap().len(), 64);
    }

    #[test]
    fn hash_ignores_execution_settings() {
        let a = GenerationConfig::default();
        let b = GenerationConfig { workers: 8, output_dir: "elsewhere".into(), ..Default::default() };
        let c = GenerationConfig { global_seed: 1, ..Default::default() };
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
        assert!(!a.identity_snapshot().unwrap().contains("workers"));
    }

    #[test]
    fn violations_are_aggregated() {
        let mut c = GenerationConfig { count: 0, workers: 0, ..Default::default() };
        c.randocc.alpha_range = [0.9, 0.5];
        c.natocc.scale_range = [0.0, 1.0];
        let paths: Vec<String> = c.violations().into_iter().map(|v| v.path).collect();
        for p in ["count", "workers", "randocc.alpha_range", "natocc.scale_range"] {
            assert!(paths.iter().any(|x| x == p), "{p} missing from {paths:?}");
        }
    }

    #[test]
    fn mix_needs_positive_weights() {
        let c = GenerationConfig {
            pipeline: Pipeline::Mix,
            mix_weights: BTreeMap::from([("natocc".into(), 0.0)]),
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
