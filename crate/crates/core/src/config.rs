//! Run configuration: one TOML file with a section per command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::ProbeConfig;
use crate::autoenc::{AutoencoderConfig, Precision, TrainSpec};
use crate::baselines::{AdmmConfig, TraditionalConfig};
use crate::error::{Error, Result};
use crate::latentopt::SearchConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub precision: Option<Precision>,
    pub threads: Option<usize>,
    pub autoencoder: AutoencoderSection,
    pub search: SearchConfig,
    pub baseline: BaselineSection,
    pub bench: BenchSection,
    pub analysis: AnalysisSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AutoencoderSection {
    pub model: AutoencoderConfig,
    pub train: TrainSpec,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    pub traditional: TraditionalConfig,
    pub admm: AdmmConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub train_count: usize,
    pub test_count: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            train_count: 3750,
            test_count: 1250,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub probe: ProbeConfig,
    pub compress: CompressSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompressSection {
    pub cuts: Vec<usize>,
    pub target_depths: Vec<usize>,
    pub train_count: usize,
    pub test_count: usize,
    /// Relative output MSE under which the fidelity report marks a pass.
    pub report_threshold: f64,
}

impl Default for CompressSection {
    fn default() -> Self {
        CompressSection {
            cuts: Vec::new(),
            target_depths: Vec::new(),
            train_count: 1024,
            test_count: 256,
            report_threshold: 0.1,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads TOML, or JSON when the extension is `.json` (as written to
    /// `resolved-config.json`).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Ok(serde_json::from_str(&text)?)
        } else {
            Self::from_toml_str(&text)
        }
    }
}
