use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use graves_core::graphio::{LabelPenalty, SplitRatios, TokenVocabulary};
use graves_core::model::ModelConfig;
use graves_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "GRAVES_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let r = SplitRatios::default();
        Self {
            train: r.train,
            val: r.val,
            test: r.test,
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.train,
            val: self.val,
            test: self.test,
        }
    }
}

/// Everything `train` needs besides the data itself.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Manifest file; the built-in vocabulary when absent.
    pub vocabulary: Option<PathBuf>,
    /// Verifier order; taken from the labels file when empty.
    pub portfolio: Vec<String>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub labels: LabelPenalty,
}

/// Parses an override value as a TOML literal, falling back to a string.
fn literal(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `GRAVES_SECTION__KEY=value` style overrides; `__` separates
/// nesting levels and names are lower-cased.
pub fn apply_overrides<I>(doc: &mut toml::Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (key, value) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..]
            .split("__")
            .map(str::to_lowercase)
            .collect();
        if path.iter().any(String::is_empty) {
            bail!("malformed override variable {key}");
        }
        let (last, parents) = path.split_last().expect("non-empty path");
        let mut table = &mut *doc;
        for p in parents {
            let entry = table
                .entry(p.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .with_context(|| format!("{key}: '{p}' is not a section"))?;
        }
        table.insert(last.clone(), literal(&value));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str, env: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut doc: toml::Table = text.parse().context("config is not valid TOML")?;
        apply_overrides(&mut doc, env)?;
        let cfg: RunConfig = doc.try_into().context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` (or starts from defaults) and applies the process
    /// environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config {}", p.display()))?,
            None => String::new(),
        };
        let mut cfg = Self::from_toml(&text, std::env::vars())?;
        if let (Some(base), Some(v)) = (path.and_then(Path::parent), cfg.vocabulary.as_mut()) {
            if v.is_relative() {
                *v = base.join(&*v);
            }
        }
        if let Some(v) = &cfg.vocabulary {
            if !v.exists() {
                bail!("vocabulary file {} does not exist", v.display());
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.split.ratios().validate()?;
        if self.labels.time_limit <= 0.0 {
            bail!("labels.time_limit must be positive");
        }
        if self.portfolio.iter().any(String::is_empty) {
            bail!("portfolio names must be non-empty");
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> Result<TokenVocabulary> {
        load_vocabulary(self.vocabulary.as_deref())
    }
}

pub fn load_vocabulary(path: Option<&Path>) -> Result<TokenVocabulary> {
    match path {
        None => Ok(TokenVocabulary::builtin()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read vocabulary {}", p.display()))?;
            Ok(TokenVocabulary::from_manifest(&text)?)
        }
    }
}
