//! `test-composite`: parametric-bootstrap goodness-of-fit test with the
//! model refitted per replicate.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use conclique_gof::bootstrap::{composite_test, AFieldMode, BootstrapConfig};
use conclique_gof::conclique::build_cover;
use conclique_gof::estimate::{FitMethod, FitResult};
use conclique_gof::grid::read_grid_file;
use conclique_gof::model::EdgeRule;

use crate::config::{load_config, merge, require, require_seed, TemplateSpec};
use crate::error::{CliError, CliResult};
use crate::output::{write_csv, write_json};

use super::fit::parse_method;
use super::residuals::parse_edge_rule;

#[derive(clap::Args, Debug)]
pub struct TestCompositeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    has_header: bool,
    #[arg(long)]
    template: Option<TemplateSpec>,
    /// Bootstrap replicates B
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    spacing: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// ml or pseudolikelihood
    #[arg(long)]
    refit_method: Option<String>,
    /// fresh or fixed randomization field across replicates
    #[arg(long)]
    a_field_mode: Option<String>,
    #[arg(long)]
    edge_rule: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    interval_level: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV of replicate statistics and parameter draws
    #[arg(long)]
    out_replicates: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestCompositeConfig {
    data: Option<PathBuf>,
    has_header: Option<bool>,
    template: Option<TemplateSpec>,
    replicates: Option<usize>,
    burn_in: Option<usize>,
    spacing: Option<usize>,
    seed: Option<u64>,
    refit_method: Option<String>,
    a_field_mode: Option<String>,
    edge_rule: Option<EdgeRule>,
    r: Option<f64>,
    interval_level: Option<f64>,
}

#[derive(Serialize)]
struct Resolved {
    data: PathBuf,
    has_header: bool,
    template: TemplateSpec,
    replicates: usize,
    burn_in: usize,
    spacing: usize,
    seed: u64,
    refit_method: String,
    a_field_mode: String,
    edge_rule: EdgeRule,
    r: f64,
    interval_level: f64,
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

impl From<&FitResult> for FitJson {
    fn from(fit: &FitResult) -> Self {
        FitJson {
            alpha: fit.alpha,
            eta: fit.eta,
            tau2: fit.tau2,
            log_lik: fit.log_likelihood,
            eta_bounds: [fit.eta_bounds.0, fit.eta_bounds.1],
            method: fit.method,
            boundary_flag: fit.boundary,
        }
    }
}

#[derive(Serialize)]
struct IntervalJson {
    level: f64,
    alpha: [f64; 2],
    eta: [f64; 2],
    tau2: [f64; 2],
}

#[derive(Serialize)]
struct CompositeJson {
    t: [f64; 4],
    p: [f64; 4],
    fit: FitJson,
    intervals: IntervalJson,
    kept: usize,
    dropped: usize,
}

fn parse_a_mode(name: &str) -> CliResult<AFieldMode> {
    match name {
        "fresh" => Ok(AFieldMode::Fresh),
        "fixed" => Ok(AFieldMode::Fixed),
        other => Err(CliError::Config(format!(
            "unknown a_field_mode {other:?}; use fresh or fixed"
        ))),
    }
}

pub fn run(args: TestCompositeArgs) -> CliResult<()> {
    let file: TestCompositeConfig = load_config(args.config.as_deref())?;
    let flag_edge = args.edge_rule.as_deref().map(parse_edge_rule).transpose()?;
    let resolved = Resolved {
        data: require(merge(args.data, file.data), "data")?,
        has_header: merge(
            if args.has_header { Some(true) } else { None },
            file.has_header,
        )
        .unwrap_or(false),
        template: require(merge(args.template, file.template), "template")?,
        replicates: merge(args.replicates, file.replicates).unwrap_or(5000),
        burn_in: merge(args.burn_in, file.burn_in).unwrap_or(500),
        spacing: merge(args.spacing, file.spacing).unwrap_or(10),
        seed: require_seed(merge(args.seed, file.seed))?,
        refit_method: merge(args.refit_method, file.refit_method)
            .unwrap_or_else(|| "ml".into()),
        a_field_mode: merge(args.a_field_mode, file.a_field_mode)
            .unwrap_or_else(|| "fresh".into()),
        edge_rule: merge(flag_edge, file.edge_rule).unwrap_or(EdgeRule::TruncatedNeighbors),
        r: merge(args.r, file.r).unwrap_or(2.0),
        interval_level: merge(args.interval_level, file.interval_level).unwrap_or(0.95),
    };
    let template = resolved.template.build()?;
    let cover = build_cover(&template);
    let data = read_grid_file(&resolved.data, resolved.has_header)?;

    let config = BootstrapConfig {
        replicates: resolved.replicates,
        burn_in: resolved.burn_in,
        spacing: resolved.spacing,
        seed: resolved.seed,
        refit_method: parse_method(&resolved.refit_method)?,
        a_field_mode: parse_a_mode(&resolved.a_field_mode)?,
        edge_rule: resolved.edge_rule,
        r: resolved.r,
        interval_level: resolved.interval_level,
    };
    let result = composite_test(&data, &template, &cover, &config)?;

    let json = CompositeJson {
        t: result.observed.as_array(),
        p: result.p_values,
        fit: FitJson::from(&result.fit),
        intervals: IntervalJson {
            level: result.intervals.level,
            alpha: [result.intervals.alpha.0, result.intervals.alpha.1],
            eta: [result.intervals.eta.0, result.intervals.eta.1],
            tau2: [result.intervals.tau2.0, result.intervals.tau2.1],
        },
        kept: result.replicate_stats.len(),
        dropped: result.dropped,
    };
    write_json("test-composite", &resolved, &json, args.out.as_deref())?;

    if let Some(path) = &args.out_replicates {
        let rows: Vec<String> = result
            .replicate_stats
            .iter()
            .zip(&result.replicate_params)
            .enumerate()
            .map(|(b, (s, p))| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    b + 1,
                    s[0],
                    s[1],
                    s[2],
                    s[3],
                    p[0],
                    p[1],
                    p[2]
                )
            })
            .collect();
        write_csv(
            "replicate,t1,t2,t3,t4,alpha,eta,tau2",
            &rows,
            Some(path),
        )?;
    }
    Ok(())
}
