//! `test-simple`: goodness-of-fit test of a fully specified null model.
//!
//! Pipeline: generalized residuals under the hypothesized parameters, the
//! four pooled statistics, then p-values against the simulated limit law
//! (closed-form covariance for the Gaussian four-nearest model, Monte Carlo
//! covariance otherwise).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use conclique_gof::conclique::build_cover;
use conclique_gof::estimate::{eta_parameter_space, Boundary, NeighborIncidence};
use conclique_gof::gof::{compute_statistics, empirical_process, generalized_residuals};
use conclique_gof::grid::read_grid_file;
use conclique_gof::lattice::NeighborhoodTemplate;
use conclique_gof::model::EdgeRule;
use conclique_gof::nulldist::{p_value, simulate_null_quantiles};
use conclique_gof::rng::{stream, Purpose};

use crate::config::{load_config, merge, require, require_seed, ModelSpec, TemplateSpec};
use crate::error::{CliError, CliResult};
use crate::output::write_json;

use super::nulldist::CovarianceConfig;
use super::residuals::parse_edge_rule;

#[derive(clap::Args, Debug)]
pub struct TestSimpleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    has_header: bool,
    #[arg(long)]
    template: Option<TemplateSpec>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    edge_rule: Option<String>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fields for the Monte Carlo covariance (non-Gaussian/non-4-nearest)
    #[arg(long)]
    mc_fields: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestSimpleConfig {
    data: Option<PathBuf>,
    has_header: Option<bool>,
    template: Option<TemplateSpec>,
    theta0: Option<ModelSpec>,
    edge_rule: Option<EdgeRule>,
    grid_size: Option<usize>,
    replicates: Option<usize>,
    r: Option<f64>,
    seed: Option<u64>,
    mc_fields: Option<usize>,
    mc_rows: Option<usize>,
    mc_cols: Option<usize>,
}

#[derive(Serialize)]
struct Resolved {
    data: PathBuf,
    has_header: bool,
    template: TemplateSpec,
    theta0: ModelSpec,
    edge_rule: EdgeRule,
    grid_size: usize,
    replicates: usize,
    r: f64,
    seed: u64,
    mc_fields: usize,
    mc_rows: usize,
    mc_cols: usize,
}

#[derive(Serialize)]
struct TestJson {
    t: [f64; 4],
    p: [f64; 4],
    q95: [f64; 4],
    q99: [f64; 4],
    #[serde(rename = "N")]
    n: usize,
    q: usize,
}

fn is_four_nearest(template: &NeighborhoodTemplate) -> bool {
    *template == NeighborhoodTemplate::four_nearest()
}

pub fn run(args: TestSimpleArgs) -> CliResult<()> {
    let file: TestSimpleConfig = load_config(args.config.as_deref())?;
    let flag_model = super::simulate::model_from_flags(
        args.family.as_deref(),
        args.alpha,
        args.eta,
        args.tau2,
        args.kappa,
    )?;
    let flag_edge = args.edge_rule.as_deref().map(parse_edge_rule).transpose()?;
    let resolved = Resolved {
        data: require(merge(args.data, file.data), "data")?,
        has_header: merge(
            if args.has_header { Some(true) } else { None },
            file.has_header,
        )
        .unwrap_or(false),
        template: require(merge(args.template, file.template), "template")?,
        theta0: require(merge(flag_model, file.theta0), "theta0")?,
        edge_rule: merge(flag_edge, file.edge_rule).unwrap_or(EdgeRule::TruncatedNeighbors),
        grid_size: merge(args.grid_size, file.grid_size).unwrap_or(512),
        replicates: merge(args.replicates, file.replicates).unwrap_or(20_000),
        r: merge(args.r, file.r).unwrap_or(2.0),
        seed: require_seed(merge(args.seed, file.seed))?,
        mc_fields: merge(args.mc_fields, file.mc_fields).unwrap_or(2000),
        mc_rows: file.mc_rows.unwrap_or(30),
        mc_cols: file.mc_cols.unwrap_or(30),
    };
    let template = resolved.template.build()?;
    let model = resolved.theta0.build(&template)?;
    let cover = build_cover(&template);
    let data = read_grid_file(&resolved.data, resolved.has_header)?;

    // a Gaussian theta0 must lie inside the eta parameter space of the
    // observed window
    if let ModelSpec::Gaussian { eta, .. } = &resolved.theta0 {
        let incidence =
            NeighborIncidence::from_window(data.window(), &template, Boundary::Free)?;
        let bounds = eta_parameter_space(&incidence);
        if !(bounds.lower < *eta && *eta < bounds.upper) {
            return Err(CliError::Config(format!(
                "theta0 eta {} outside the parameter space ({:.6}, {:.6})",
                eta, bounds.lower, bounds.upper
            )));
        }
    }

    let mut rng = stream(resolved.seed, Purpose::ResidualAField);
    let residuals =
        generalized_residuals(&data, &model, &cover, resolved.edge_rule, &mut rng)?;
    let stats = compute_statistics(&empirical_process(&residuals)?, resolved.r)?;

    let cov_config = match (&resolved.theta0, is_four_nearest(&template)) {
        (ModelSpec::Gaussian { eta, .. }, true) => {
            CovarianceConfig::GaussianFourNearest { eta: *eta }
        }
        _ => CovarianceConfig::MonteCarlo {
            model: resolved.theta0.clone(),
            template: resolved.template.clone(),
            rows: resolved.mc_rows,
            cols: resolved.mc_cols,
            mc_fields: resolved.mc_fields,
            burn_in: 500,
            spacing: 10,
        },
    };
    let spec = cov_config.build(resolved.seed)?;
    let table = simulate_null_quantiles(
        &spec,
        resolved.grid_size,
        resolved.replicates,
        resolved.r,
        resolved.seed,
    )?;

    let result = TestJson {
        t: stats.as_array(),
        p: p_value(&stats, &table),
        q95: table.quantiles(0.95).map_err(CliError::from)?,
        q99: table.quantiles(0.99).map_err(CliError::from)?,
        n: residuals.n_total,
        q: residuals.q(),
    };
    write_json("test-simple", &resolved, &result, args.out.as_deref())
}
