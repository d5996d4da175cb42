//! Run configuration: a TOML file plus dotted-key overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use msvq_core::corpus::{ExperimentProtocol, SyntheticSpec};
use msvq_core::experiment::{ExperimentConfig, Matcher};
use msvq_core::{DtwConfig, FusionSpec, ModelConfig};

pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.toml";

/// Dimensions of the cost comparison between DTW and codebook matching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    /// Reference signatures per user for DTW (K).
    pub templates: usize,
    /// Test signature length (I).
    pub test_len: usize,
    /// Reference signature length (J).
    pub ref_len: usize,
    /// Codebook size (L).
    pub codebook_size: usize,
    /// Sections (S).
    pub sections: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            templates: 5,
            test_len: 454,
            ref_len: 454,
            codebook_size: 16,
            sections: 1,
        }
    }
}

/// Everything a run depends on. Worker count and output locations are deliberately
/// absent: they do not change results.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Corpus directory with a manifest; a synthetic corpus is generated when unset.
    pub corpus: Option<PathBuf>,
    pub matcher: Matcher,
    pub model: ModelConfig,
    pub fusion: FusionSpec,
    pub dtw: DtwConfig,
    pub protocol: ExperimentProtocol,
    pub synthetic: SyntheticSpec,
    pub bench: BenchConfig,
}

impl RunConfig {
    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            matcher: self.matcher,
            model: self.model.clone(),
            fusion: self.fusion.clone(),
            dtw: self.dtw.clone(),
            protocol: self.protocol.clone(),
            synthetic: self.synthetic.clone(),
        }
    }

    /// Loads `path` (or the defaults) and applies `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .with_context(|| format!("{}: invalid TOML", p.display()))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            set_path(&mut table, key, parse_value(value))?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| anyhow::anyhow!("{}", one_line(&e.to_string())))
            .context("invalid configuration")?;
        cfg.experiment().validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("cannot serialize configuration")
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Reads an override value as TOML, falling back to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("invalid override key {key:?}");
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("override {key:?}: {part:?} is not a table"),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use msvq_core::{FeatureSetId, FusionStrategy};

    fn load(overrides: &[(&str, &str)]) -> Result<RunConfig> {
        let o: Vec<(String, String)> = overrides
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        RunConfig::load(None, &o)
    }

    #[test]
    fn defaults_are_single_section_fs6_128() {
        let c = load(&[]).unwrap();
        assert_eq!(c.model.sections, 1);
        assert_eq!(c.model.codebook_size, 128);
        assert_eq!(c.model.feature_set, FeatureSetId::FS6);
        assert_eq!(c.matcher, Matcher::Vq);
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let c = load(&[
            ("model.sections", "3"),
            ("model.feature_set", "FS2"),
            ("fusion.strategy", "WSRE"),
            ("synthetic.seed", "9"),
            ("corpus", "data/x"),
        ])
        .unwrap();
        assert_eq!(c.model.sections, 3);
        assert_eq!(c.model.feature_set, FeatureSetId::FS2);
        assert_eq!(c.fusion.strategy, FusionStrategy::Wsre);
        assert_eq!(c.synthetic.seed, 9);
        assert_eq!(c.corpus, Some(PathBuf::from("data/x")));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(load(&[("model.sectoins", "2")]).is_err());
        assert!(load(&[("colour", "1")]).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(load(&[("model.codebook_size", "0")]).is_err());
        assert!(load(&[("synthetic.genuine_jitter", "0.5")]).is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let c = load(&[("model.sections", "2"), ("fusion.strategy", "WSD")]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(EFFECTIVE_CONFIG_FILE);
        std::fs::write(&p, c.to_toml().unwrap()).unwrap();
        assert_eq!(RunConfig::load(Some(&p), &[]).unwrap(), c);
    }
}
