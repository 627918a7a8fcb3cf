//! `null-dist`: simulate the limit law of the four statistics and emit a
//! quantile table.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use conclique_gof::conclique::build_cover;
use conclique_gof::lattice::SamplingWindow;
use conclique_gof::nulldist::{
    estimate_mc_covariance, simulate_null_quantiles, LimitCovarianceSpec, NullQuantileTable,
};
use conclique_gof::rng::{stream, Purpose};
use conclique_gof::stats::{mean, variance};

use crate::config::{load_config, merge, require, require_seed, ModelSpec, TemplateSpec};
use crate::error::{CliError, CliResult};
use crate::output::{write_csv, write_json};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceConfig {
    /// Closed-form Gaussian four-nearest covariance.
    GaussianFourNearest { eta: f64 },
    /// Independent scaled Brownian bridges.
    Diagonal { scales: Vec<f64> },
    /// Monte Carlo pair-probability estimate under an arbitrary model.
    MonteCarlo {
        model: ModelSpec,
        template: TemplateSpec,
        rows: usize,
        cols: usize,
        #[serde(default = "default_mc_fields")]
        mc_fields: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "default_spacing")]
        spacing: usize,
    },
}

fn default_mc_fields() -> usize {
    2000
}
fn default_burn_in() -> usize {
    500
}
fn default_spacing() -> usize {
    10
}

impl CovarianceConfig {
    pub fn build(&self, seed: u64) -> CliResult<LimitCovarianceSpec> {
        match self {
            CovarianceConfig::GaussianFourNearest { eta } => {
                Ok(LimitCovarianceSpec::GaussianFourNearest { eta: *eta })
            }
            CovarianceConfig::Diagonal { scales } => Ok(LimitCovarianceSpec::Diagonal {
                scales: scales.clone(),
            }),
            CovarianceConfig::MonteCarlo {
                model,
                template,
                rows,
                cols,
                mc_fields,
                burn_in,
                spacing,
            } => {
                let template = template.build()?;
                let model = model.build(&template)?;
                let cover = build_cover(&template);
                let window = SamplingWindow::rect(*rows, *cols);
                let mut rng = stream(seed, Purpose::FieldSimulation);
                let mc = estimate_mc_covariance(
                    &model, &window, &cover, *mc_fields, *burn_in, *spacing, &mut rng,
                )?;
                Ok(LimitCovarianceSpec::MonteCarlo(mc))
            }
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct NullDistArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Shortcut for the Gaussian four-nearest covariance at this eta
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Quantile levels, e.g. --levels 0.95 --levels 0.99
    #[arg(long)]
    levels: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional CSV with all functional draws
    #[arg(long)]
    out_draws: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullDistConfig {
    covariance: Option<CovarianceConfig>,
    grid_size: Option<usize>,
    replicates: Option<usize>,
    r: Option<f64>,
    seed: Option<u64>,
    levels: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Resolved {
    covariance: CovarianceConfig,
    grid_size: usize,
    replicates: usize,
    r: f64,
    seed: u64,
    levels: Vec<f64>,
}

#[derive(Serialize)]
struct TableJson {
    levels: Vec<f64>,
    /// One row per level: the four functional quantiles.
    quantiles: Vec<[f64; 4]>,
    q95: [f64; 4],
    q99: [f64; 4],
    summary: SummaryJson,
}

#[derive(Serialize)]
struct SummaryJson {
    mean: [f64; 4],
    sd: [f64; 4],
}

pub fn table_summary(table: &NullQuantileTable) -> ([f64; 4], [f64; 4]) {
    let mut means = [0.0; 4];
    let mut sds = [0.0; 4];
    for i in 0..4 {
        means[i] = mean(&table.draws[i]);
        sds[i] = variance(&table.draws[i]).sqrt();
    }
    (means, sds)
}

pub fn run(args: NullDistArgs) -> CliResult<()> {
    let file: NullDistConfig = load_config(args.config.as_deref())?;
    let flag_cov = args
        .eta
        .map(|eta| CovarianceConfig::GaussianFourNearest { eta });
    let resolved = Resolved {
        covariance: require(merge(flag_cov, file.covariance), "covariance")?,
        grid_size: merge(args.grid_size, file.grid_size).unwrap_or(512),
        replicates: merge(args.replicates, file.replicates).unwrap_or(20_000),
        r: merge(args.r, file.r).unwrap_or(2.0),
        seed: require_seed(merge(args.seed, file.seed))?,
        levels: merge(
            if args.levels.is_empty() {
                None
            } else {
                Some(args.levels.clone())
            },
            file.levels,
        )
        .unwrap_or_else(|| vec![0.95, 0.99]),
    };
    if resolved.levels.iter().any(|l| !(0.0 < *l && *l < 1.0)) {
        return Err(CliError::Config("quantile levels must lie in (0,1)".into()));
    }
    let spec = resolved.covariance.build(resolved.seed)?;
    let table = simulate_null_quantiles(
        &spec,
        resolved.grid_size,
        resolved.replicates,
        resolved.r,
        resolved.seed,
    )?;

    let mut quantiles = Vec::with_capacity(resolved.levels.len());
    for &level in &resolved.levels {
        quantiles.push(table.quantiles(level).map_err(CliError::from)?);
    }
    let (means, sds) = table_summary(&table);
    let result = TableJson {
        levels: resolved.levels.clone(),
        quantiles,
        q95: table.quantiles(0.95).map_err(CliError::from)?,
        q99: table.quantiles(0.99).map_err(CliError::from)?,
        summary: SummaryJson {
            mean: means,
            sd: sds,
        },
    };
    write_json("null-dist", &resolved, &result, args.out.as_deref())?;

    if let Some(path) = &args.out_draws {
        let rows: Vec<String> = (0..table.replicates)
            .map(|i| {
                format!(
                    "{},{},{},{}",
                    table.draws[0][i], table.draws[1][i], table.draws[2][i], table.draws[3][i]
                )
            })
            .collect();
        write_csv("t1,t2,t3,t4", &rows, Some(path))?;
    }
    Ok(())
}
