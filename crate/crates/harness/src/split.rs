//! Train/val/test splits from a TOML config.
//!
//! ```toml
//! master_seed = 42
//! answers = "fair"        # or "biased"; ignored when `specs` is given
//! out = "iid"             # relative to the data root unless absolute
//! image_side = 64         # optional PGM sheets
//!
//! [counts]
//! train = 300
//! val = 100
//! test = 100
//!
//! # Optional; defaults to the IID spec list for `answers`.
//! [[specs]]
//! family = "progression"
//! attributes = ["number"]
//! layout = "grid_3x3"
//! background = "constant"
//! ```
//!
//! Splits take consecutive global index ranges of one round-robin stream
//! (train first), so no two splits share a `(spec, instance)` seed
//! coordinate.

use std::path::{Path, PathBuf};

use conceptprobe_core::raven::suites::iid_specs;
use conceptprobe_core::raven::{ConceptSpec, Strategy};
use serde::{Deserialize, Serialize};

use crate::dataset::{materialize, write_dataset, Dataset, Recipe, Split};
use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitCounts {
    #[serde(default)]
    pub train: usize,
    #[serde(default)]
    pub val: usize,
    #[serde(default)]
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub master_seed: u64,
    #[serde(default)]
    pub answers: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub image_side: Option<u32>,
    pub counts: SplitCounts,
    #[serde(default)]
    pub specs: Option<Vec<ConceptSpec>>,
}

impl SplitConfig {
    pub fn from_toml(text: &str) -> Result<SplitConfig, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
    }

    pub fn resolved_specs(&self) -> Result<Vec<ConceptSpec>, HarnessError> {
        let specs = match &self.specs {
            Some(specs) => specs.clone(),
            None => {
                let name = self.answers.as_deref().unwrap_or("fair");
                let strategy = Strategy::from_name(name)
                    .ok_or_else(|| HarnessError::ConfigInvalid(format!("unknown answer strategy {name}")))?;
                iid_specs(strategy)
            }
        };
        if specs.is_empty() {
            return Err(HarnessError::ConfigInvalid("empty spec list".into()));
        }
        for s in &specs {
            s.validate().map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        }
        Ok(specs)
    }

    /// Output directory; relative paths resolve against `data_root`.
    pub fn out_dir(&self, data_root: &Path) -> PathBuf {
        match &self.out {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => data_root.join(p),
            None => data_root.join("splits"),
        }
    }
}

/// One dataset per non-empty split, in train, val, test order.
pub fn build_split(config: &SplitConfig) -> Result<Vec<Dataset>, HarnessError> {
    let specs = config.resolved_specs()?;
    let c = config.counts;
    if c.train + c.val + c.test == 0 {
        return Err(HarnessError::ConfigInvalid("all split counts are zero".into()));
    }
    let mut offset = 0;
    let mut out = Vec::new();
    for (split, count) in [(Split::Train, c.train), (Split::Val, c.val), (Split::Test, c.test)] {
        if count == 0 {
            continue;
        }
        let recipe = Recipe::Raven { specs: specs.clone(), offset, count, image_side: config.image_side };
        out.push(materialize(split, config.master_seed, recipe)?);
        offset += count;
    }
    Ok(out)
}

/// Builds and writes `<out>/<split>/` for every split; returns the paths.
pub fn run_split(config: &SplitConfig, data_root: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let root = config.out_dir(data_root);
    build_split(config)?
        .iter()
        .map(|ds| {
            let dir = root.join(ds.manifest.split.name());
            write_dataset(&dir, ds)?;
            Ok(dir)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = SplitConfig::from_toml("master_seed = 1\n[counts]\ntrain = 3\n").unwrap();
        assert_eq!(c.counts, SplitCounts { train: 3, val: 0, test: 0 });
        assert_eq!(c.resolved_specs().unwrap().len(), 21);
        assert!(SplitConfig::from_toml("master_seed = 1\n").is_err());
        assert!(SplitConfig::from_toml("master_seed = 1\nbogus = 2\n[counts]\n").is_err());
    }

    #[test]
    fn rejects_unknown_strategy_and_zero_counts() {
        let c = SplitConfig::from_toml("master_seed = 1\nanswers = \"odd\"\n[counts]\ntrain = 3\n").unwrap();
        assert!(matches!(build_split(&c), Err(HarnessError::ConfigInvalid(_))));
        let c = SplitConfig::from_toml("master_seed = 1\n[counts]\n").unwrap();
        assert!(matches!(build_split(&c), Err(HarnessError::ConfigInvalid(_))));
    }
}
