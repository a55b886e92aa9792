//! Space lookup with an optional directory of named presets.
//!
//! A preset is `<dir>/<name>.json` holding `{"base": "<catalog name>",
//! "params": {...}}`; `dir` comes from `FMPD_CATALOG_DIR`. Presets shadow the
//! built-in catalog, and parameters given alongside the name override the
//! preset's.

use std::path::PathBuf;

use fmpd::spaces::{self, Params, SpaceDescriptor};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const CATALOG_ENV: &str = "FMPD_CATALOG_DIR";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Preset {
    base: String,
    #[serde(default)]
    params: Params,
}

fn preset_path(name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(CATALOG_ENV)?;
    let path = PathBuf::from(dir).join(format!("{name}.json"));
    path.is_file().then_some(path)
}

/// Builds `name`, consulting presets first.
pub fn resolve(name: &str, params: &Params) -> Result<SpaceDescriptor> {
    let (base, mut merged) = match preset_path(name) {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
            let preset: Preset = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (preset.base, preset.params)
        }
        None => (name.to_string(), Params::new()),
    };
    if !spaces::CATALOG.contains(&base.as_str()) {
        return Err(CliError::Config(format!(
            "unknown space `{base}`; built-in spaces are {:?}",
            spaces::CATALOG
        )));
    }
    merged.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
    Ok(spaces::build(&base, &merged)?)
}
