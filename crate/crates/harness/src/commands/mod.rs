pub mod complexity;
pub mod convergence;
pub mod gradcheck;
pub mod optimize;
pub mod sinr;
pub mod sweep;

use std::path::Path;

use ma_array::scenario::{Scenario, ScenarioConfig, ScenarioFile};

use crate::error::Result;

/// Reads a scenario file, or the built-in reference scenario when `path` is `None`.
pub fn load_scenario(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        Some(p) => Ok(ScenarioFile::load(p)?),
        None => Ok(ScenarioConfig::reference()),
    }
}

pub fn validated(cfg: ScenarioConfig) -> Result<Scenario> {
    Ok(cfg.validate().map_err(ma_array::Error::from)?)
}
