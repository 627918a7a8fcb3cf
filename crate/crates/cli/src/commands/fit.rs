//! `fit`: estimate a conditional Gaussian model from a grid file.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use conclique_gof::estimate::{fit_ml_grid, fit_pseudolikelihood_grid, FitMethod};
use conclique_gof::grid::read_grid_file;

use crate::config::{load_config, merge, require, TemplateSpec};
use crate::error::{CliError, CliResult};
use crate::output::write_json;

#[derive(clap::Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input grid CSV (numeric cells or NA)
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    has_header: bool,
    #[arg(long)]
    template: Option<TemplateSpec>,
    /// ml or pseudolikelihood
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    data: Option<PathBuf>,
    has_header: Option<bool>,
    template: Option<TemplateSpec>,
    method: Option<String>,
}

#[derive(Serialize)]
struct Resolved {
    data: PathBuf,
    has_header: bool,
    template: TemplateSpec,
    method: String,
}

#[derive(Serialize)]
struct FitJson {
    alpha: f64,
    eta: f64,
    tau2: f64,
    #[serde(rename = "logLik")]
    log_lik: f64,
    #[serde(rename = "etaBounds")]
    eta_bounds: [f64; 2],
    method: FitMethod,
    #[serde(rename = "boundaryFlag")]
    boundary_flag: bool,
}

pub fn parse_method(name: &str) -> CliResult<FitMethod> {
    match name {
        "ml" => Ok(FitMethod::Ml),
        "pseudolikelihood" | "pl" => Ok(FitMethod::Pseudolikelihood),
        other => Err(CliError::Config(format!(
            "unknown fit method {other:?}; use ml or pseudolikelihood"
        ))),
    }
}

pub fn run(args: FitArgs) -> CliResult<()> {
    let file: FitConfig = load_config(args.config.as_deref())?;
    let resolved = Resolved {
        data: require(merge(args.data, file.data), "data")?,
        has_header: merge(
            if args.has_header { Some(true) } else { None },
            file.has_header,
        )
        .unwrap_or(false),
        template: require(merge(args.template, file.template), "template")?,
        method: merge(args.method, file.method).unwrap_or_else(|| "ml".into()),
    };
    let method = parse_method(&resolved.method)?;
    let template = resolved.template.build()?;
    let data = read_grid_file(&resolved.data, resolved.has_header)?;
    let fit = match method {
        FitMethod::Ml => fit_ml_grid(&data, &template)?,
        FitMethod::Pseudolikelihood => fit_pseudolikelihood_grid(&data, &template)?,
    };
    let result = FitJson {
        alpha: fit.alpha,
        eta: fit.eta,
        tau2: fit.tau2,
        log_lik: fit.log_likelihood,
        eta_bounds: [fit.eta_bounds.0, fit.eta_bounds.1],
        method: fit.method,
        boundary_flag: fit.boundary,
    };
    write_json("fit", &resolved, &result, args.out.as_deref())
}
