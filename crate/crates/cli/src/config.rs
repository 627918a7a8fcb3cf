//! Shared configuration pieces: template and model specifications, config
//! file loading, and the flags-over-file merge rule.

use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use conclique_gof::lattice::{NeighborhoodTemplate, Point};
use conclique_gof::model::{BinaryMrfSpec, Family, GaussianMrfSpec, MrfModel};

use crate::error::{CliError, CliResult};

/// Template selection: a named preset or explicit offsets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemplateSpec {
    Named(String),
    Offsets { offsets: Vec<Vec<i64>> },
}

impl TemplateSpec {
    pub fn build(&self) -> CliResult<NeighborhoodTemplate> {
        match self {
            TemplateSpec::Named(name) => match name.as_str() {
                "four-nearest" | "four_nearest" => Ok(NeighborhoodTemplate::four_nearest()),
                "eight-nearest" | "eight_nearest" => Ok(NeighborhoodTemplate::eight_nearest()),
                other => Err(CliError::Config(format!(
                    "unknown template {other:?}; use four-nearest, eight-nearest, or offsets"
                ))),
            },
            TemplateSpec::Offsets { offsets } => {
                let points: Vec<Point> = offsets.iter().map(|c| Point(c.clone())).collect();
                NeighborhoodTemplate::new(points).map_err(CliError::from)
            }
        }
    }
}

impl FromStr for TemplateSpec {
    type Err = String;

    /// `four-nearest`, `eight-nearest`, or offsets in the form
    /// `0,-1;-1,0` (points separated by `;`, coordinates by `,`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(';') || s.contains(',') {
            let offsets: Result<Vec<Vec<i64>>, _> = s
                .split(';')
                .map(|p| {
                    p.split(',')
                        .map(|c| c.trim().parse::<i64>().map_err(|e| e.to_string()))
                        .collect()
                })
                .collect();
            Ok(TemplateSpec::Offsets { offsets: offsets? })
        } else {
            Ok(TemplateSpec::Named(s.to_string()))
        }
    }
}

/// Conditional model family with parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelSpec {
    Gaussian { alpha: f64, eta: f64, tau2: f64 },
    Binary { kappa: f64, eta: f64 },
}

impl ModelSpec {
    pub fn build(&self, template: &NeighborhoodTemplate) -> CliResult<MrfModel> {
        match self {
            ModelSpec::Gaussian { alpha, eta, tau2 } => Ok(MrfModel {
                family: Family::Gaussian(
                    GaussianMrfSpec::new(*alpha, *eta, *tau2).map_err(CliError::from)?,
                ),
                template: template.clone(),
            }),
            ModelSpec::Binary { kappa, eta } => Ok(MrfModel {
                family: Family::Binary(
                    BinaryMrfSpec::new(*kappa, *eta).map_err(CliError::from)?,
                ),
                template: template.clone(),
            }),
        }
    }
}

/// Loads a partial config from a JSON file, or the type's default when no
/// path is given. Unknown fields are rejected.
pub fn load_config<C: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<C> {
    match path {
        None => Ok(C::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {p:?}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("cannot parse config {p:?}: {e}")))
        }
    }
}

/// Flags win over the config file.
pub fn merge<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn require<T>(value: Option<T>, name: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("missing required option `{name}`")))
}

/// Stochastic commands must be given an explicit seed.
pub fn require_seed(value: Option<u64>) -> CliResult<u64> {
    value.ok_or_else(|| {
        CliError::Config("missing required option `seed` (stochastic command)".into())
    })
}
