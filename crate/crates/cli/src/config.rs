use std::path::Path;

use serde::{Deserialize, Serialize};

use rsrforge::discovery::InferConfig;
use rsrforge::verification::VerifyConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSettings {
    pub repetitions: usize,
    pub use_approx: bool,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings { repetitions: 5, use_approx: false }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    /// 0 means one worker per logical core.
    pub workers: usize,
    pub format: String,
    pub timing: bool,
    pub infer: InferConfig,
    pub verify: VerifyConfig,
    pub bench: BenchSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: 0,
            format: "json".into(),
            timing: false,
            infer: InferConfig::default(),
            verify: VerifyConfig::default(),
            bench: BenchSettings::default(),
        }
    }
}

impl RunConfig {
    /// Overlay a TOML document onto `self`. Keys absent from the document keep
    /// their current values.
    pub fn overlay(&self, text: &str) -> Result<RunConfig, String> {
        let file: toml::Table = toml::from_str(text).map_err(|e| format!("config: {e}"))?;
        let mut base = toml::Table::try_from(self).map_err(|e| format!("config: {e}"))?;
        merge(&mut base, file);
        toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| format!("config: {e}"))
    }

    pub fn overlay_file(&self, path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        self.overlay(&text)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_keeps_unset_keys() {
        let base = RunConfig { seed: 4, ..Default::default() };
        let c = base.overlay("workers = 2\n[infer]\nmax_degree = 3\nbox = { lo = -3.0, hi = 3.0 }\n").unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.workers, 2);
        assert_eq!(c.infer.max_degree, 3);
        assert_eq!(c.infer.sample_box.hi, 3.0);
        assert_eq!(c.infer.epsilon, 1e-3);
        assert_eq!(c.verify, VerifyConfig::default());
    }

    #[test]
    fn snapshot_round_trips() {
        let c = RunConfig { seed: 9, ..Default::default() };
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::default().overlay(&text).unwrap(), c);
    }

    #[test]
    fn bad_key_type_is_an_error() {
        assert!(RunConfig::default().overlay("seed = \"x\"").is_err());
    }
}
