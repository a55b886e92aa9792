//! Experiment description read by `fmpd run`.

use std::path::{Path, PathBuf};

use fmpd::dynamics::{
    initial_massive4, initial_massless4, initial_spinoptics3, ClosureSpec, WorldlineState,
};
use fmpd::geometry::SpinTensor;
use fmpd::integrator::IntegratorConfig;
use fmpd::jets::FinslerSpace;
use fmpd::spaces::{self, Params};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub space: SpaceRef,
    pub closure: ClosureConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Seed for anything sampled; runs themselves are deterministic.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceRef {
    pub name: String,
    #[serde(default)]
    pub params: Params,
}

/// Observer `t`: a named field or a fixed vector at the initial point.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObserverSpec {
    Named(String),
    Vector(Vec<f64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClosureConfig {
    Geodesic,
    /// `P·P = p²`, spin `s` with polarization `helicity`.
    Spinoptics3d { p: f64, s: f64, helicity: f64 },
    /// `P·P = m²`; `j` orients the spin in the rest frame of `P`.
    Massive4d { m: f64, s: f64, j: Vec<f64> },
    Massless4dExact { s: f64, helicity: f64, observer: ObserverSpec },
    Massless4dObserver { s: f64, helicity: f64, observer: ObserverSpec },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub x: Vec<f64>,
    /// Direction of `P`; its spatial part for the massless closures, where
    /// `P⁰` is solved from `L(X, P) = 0`. Geodesics start with `P = direction`.
    pub direction: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths resolve against the config file's directory.
    pub dir: PathBuf,
    pub stem: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("."),
            stem: "run".into(),
        }
    }
}

impl ExperimentConfig {
    /// Accepts a config or a run manifest, which embeds its config.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let body = match value.get("config") {
            Some(inner) if value.get("manifest_version").is_some() => inner.clone(),
            _ => value,
        };
        let config: ExperimentConfig =
            serde_json::from_value(body).map_err(|e| CliError::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        config.integrator.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::from_json(&text)
    }

    pub fn closure_spec(&self) -> Result<ClosureSpec> {
        Ok(match &self.closure {
            ClosureConfig::Geodesic => ClosureSpec::geodesic(),
            ClosureConfig::Spinoptics3d { p, s, helicity } => ClosureSpec::spinoptics3(*p, *s, *helicity)?,
            ClosureConfig::Massive4d { m, s, .. } => ClosureSpec::massive4(*m, *s)?,
            ClosureConfig::Massless4dExact { s, helicity, .. } => ClosureSpec::massless4_exact(*s, *helicity)?,
            ClosureConfig::Massless4dObserver { s, helicity, observer } => {
                let ObserverSpec::Named(name) = observer else {
                    return Err(CliError::Config(
                        "the observer closure needs a named observer field, not a vector".into(),
                    ));
                };
                ClosureSpec::massless4_observer(*s, *helicity, named_observer(name)?)?
            }
        })
    }

    /// Builds the initial state and checks its dimensions against `space`.
    pub fn initial_state(&self, space: &FinslerSpace, spec: &ClosureSpec) -> Result<WorldlineState> {
        let n = space.dim();
        let x = &self.initial.x;
        let dir = &self.initial.direction;
        let want_dir = if spec.kind.is_massless() { n - 1 } else { n };
        if x.len() != n || dir.len() != want_dir {
            return Err(CliError::Config(format!(
                "initial.x needs {n} components and initial.direction {want_dir}, got {} and {}",
                x.len(),
                dir.len()
            )));
        }
        spec.check_space(space)?;
        Ok(match &self.closure {
            ClosureConfig::Geodesic => WorldlineState::new(
                0.0,
                DVector::from_column_slice(x),
                DVector::from_column_slice(dir),
                SpinTensor::zeros(n),
            )?,
            ClosureConfig::Spinoptics3d { p, .. } => initial_spinoptics3(space, x, dir, *p, spec.signed_s())?,
            ClosureConfig::Massive4d { m, s, j } => {
                if j.len() != n {
                    return Err(CliError::Config(format!("closure.j needs {n} components, got {}", j.len())));
                }
                initial_massive4(space, x, dir, *m, j, *s)?
            }
            ClosureConfig::Massless4dExact { observer, .. } | ClosureConfig::Massless4dObserver { observer, .. } => {
                let t = match observer {
                    ObserverSpec::Named(name) => named_observer(name)?.value(x),
                    ObserverSpec::Vector(t) if t.len() == n => t.clone(),
                    ObserverSpec::Vector(t) => {
                        return Err(CliError::Config(format!("observer needs {n} components, got {}", t.len())))
                    }
                };
                initial_massless4(space, x, dir, &t, spec.signed_s())?
            }
        })
    }

    /// Output directory, resolved against the directory holding the config.
    pub fn output_dir(&self, config_path: &Path) -> PathBuf {
        if self.output.dir.is_absolute() {
            return self.output.dir.clone();
        }
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&self.output.dir)
    }
}

fn named_observer(name: &str) -> Result<std::sync::Arc<fmpd::jets::NamedField>> {
    spaces::observer_field(name)
        .ok_or_else(|| CliError::Config(format!("unknown observer field `{name}` (try `static` or `tilted`)")))
}
