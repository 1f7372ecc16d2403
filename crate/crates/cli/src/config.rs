use std::path::{Path, PathBuf};

use meanfield_core::forward::SolverOptions;
use meanfield_core::{Error, ModelSpec, Result, ValidatedModel};
use serde::Deserialize;

/// Options of a run, read from the `--config` JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    /// Species sizes `N_l` for exact computations.
    pub sizes: Option<Vec<usize>>,
    /// Size vectors for the `pressure` ladder.
    pub ladder: Option<Vec<Vec<usize>>>,
    /// Number of draws for `sample`.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Coupling grid for `phase`.
    pub j_grid: Option<Vec<f64>>,
    /// External field for `phase`.
    #[serde(default)]
    pub field: f64,
    /// Conditioning radius used by `limits` when the maximum is not unique.
    pub ball_radius: Option<f64>,
    /// Where `limits` writes the exact finite-size laws.
    pub law_csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn model(&self) -> Result<ValidatedModel> {
        self.model.clone().ok_or_else(|| missing("model"))?.validate()
    }

    pub fn sizes(&self) -> Result<&[usize]> {
        self.sizes.as_deref().ok_or_else(|| missing("sizes"))
    }
}

pub fn missing(field: &str) -> Error {
    Error::Parse(format!("config is missing `{field}`"))
}
