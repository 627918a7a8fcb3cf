//! Study pipelines: size agreement with the limit quantiles, distance
//! metrics between finite-sample and limit distributions, and power curves.
//!
//! All three studies target the conditional Gaussian model with the
//! four-nearest template at `alpha = 0`, `tau2 = 1`; fields are drawn by
//! one long conclique-blocked Gibbs chain per study cell.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use conclique_gof::conclique::build_cover;
use conclique_gof::gof::{compute_statistics, empirical_process, generalized_residuals};
use conclique_gof::lattice::{NeighborhoodTemplate, SamplingWindow};
use conclique_gof::model::{gibbs_simulate, EdgeRule, GaussianMrfSpec, MrfModel};
use conclique_gof::nulldist::{
    cm_distance, ks_distance, simulate_null_quantiles, LimitCovarianceSpec, NullQuantileTable,
};
use conclique_gof::rng::{stream, substream, Purpose};

use crate::config::{load_config, merge, require_seed};
use crate::error::{CliError, CliResult};
use crate::output::write_csv;

fn parse_dims(text: &str) -> CliResult<Vec<[usize; 2]>> {
    text.split(',')
        .map(|d| {
            let parts: Vec<&str> = d.split('x').collect();
            if parts.len() != 2 {
                return Err(CliError::Config(format!(
                    "bad window size {d:?}; expected ROWSxCOLS"
                )));
            }
            let rows = parts[0]
                .trim()
                .parse()
                .map_err(|e| CliError::Config(format!("bad rows in {d:?}: {e}")))?;
            let cols = parts[1]
                .trim()
                .parse()
                .map_err(|e| CliError::Config(format!("bad cols in {d:?}: {e}")))?;
            Ok([rows, cols])
        })
        .collect()
}

fn parse_f64_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|e| CliError::Config(format!("bad number {x:?}: {e}")))
        })
        .collect()
}

/// Distinct sub-seed per study cell, so cells draw independent streams.
fn cell_seed(seed: u64, cell: u64) -> u64 {
    seed.wrapping_add(cell.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Simulates `replicates` fields under `gen_eta` and returns the four
/// statistics per field, with residuals computed under `null_eta`.
#[allow(clippy::too_many_arguments)]
fn simulated_statistics(
    gen_eta: f64,
    null_eta: f64,
    rows: usize,
    cols: usize,
    replicates: usize,
    burn_in: usize,
    spacing: usize,
    r: f64,
    edge_rule: EdgeRule,
    seed: u64,
) -> CliResult<Vec<[f64; 4]>> {
    let template = NeighborhoodTemplate::four_nearest();
    let cover = build_cover(&template);
    let window = SamplingWindow::rect(rows, cols);
    let gen_model = MrfModel::gaussian(
        GaussianMrfSpec::new(0.0, gen_eta, 1.0).map_err(CliError::from)?,
        template.clone(),
    );
    let null_model = MrfModel::gaussian(
        GaussianMrfSpec::new(0.0, null_eta, 1.0).map_err(CliError::from)?,
        template.clone(),
    );
    let mut rng = stream(seed, Purpose::FieldSimulation);
    let fields = gibbs_simulate(
        &gen_model, &window, &cover, burn_in, spacing, replicates, &mut rng,
    )?;
    let stats: Result<Vec<[f64; 4]>, conclique_gof::Error> = fields
        .par_iter()
        .enumerate()
        .map(|(i, field)| {
            let mut rng = substream(seed, Purpose::ResidualAField, i as u64);
            let residuals =
                generalized_residuals(field, &null_model, &cover, edge_rule, &mut rng)?;
            Ok(compute_statistics(&empirical_process(&residuals)?, r)?.as_array())
        })
        .collect();
    stats.map_err(CliError::from)
}

fn limit_table(eta: f64, grid_size: usize, replicates: usize, r: f64, seed: u64) -> CliResult<NullQuantileTable> {
    let spec = LimitCovarianceSpec::GaussianFourNearest { eta };
    simulate_null_quantiles(&spec, grid_size, replicates, r, seed).map_err(CliError::from)
}

// ---------------------------------------------------------------- table 1

#[derive(clap::Args, Debug)]
pub struct StudyTable1Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dependence parameters, e.g. "0,0.1,0.24"
    #[arg(long)]
    etas: Option<String>,
    /// Window sizes, e.g. "10x10,30x30"
    #[arg(long)]
    dims: Option<String>,
    /// Fields per cell
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// Limit-law draws per cell
    #[arg(long)]
    table_replicates: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    spacing: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    etas: Option<Vec<f64>>,
    dims: Option<Vec<[usize; 2]>>,
    replicates: Option<usize>,
    grid_size: Option<usize>,
    table_replicates: Option<usize>,
    burn_in: Option<usize>,
    spacing: Option<usize>,
    r: Option<f64>,
    seed: Option<u64>,
    gammas: Option<Vec<f64>>,
    null_eta: Option<f64>,
}

struct StudyCommon {
    etas: Vec<f64>,
    dims: Vec<[usize; 2]>,
    replicates: usize,
    grid_size: usize,
    table_replicates: usize,
    burn_in: usize,
    spacing: usize,
    r: f64,
    seed: u64,
}

fn resolve_common(
    etas: Option<String>,
    dims: Option<String>,
    replicates: Option<usize>,
    grid_size: Option<usize>,
    table_replicates: Option<usize>,
    burn_in: Option<usize>,
    spacing: Option<usize>,
    r: Option<f64>,
    seed: Option<u64>,
    file: &StudyConfig,
    default_etas: &[f64],
    default_replicates: usize,
) -> CliResult<StudyCommon> {
    let flag_etas = etas.as_deref().map(parse_f64_list).transpose()?;
    let flag_dims = dims.as_deref().map(parse_dims).transpose()?;
    Ok(StudyCommon {
        etas: merge(flag_etas, file.etas.clone()).unwrap_or_else(|| default_etas.to_vec()),
        dims: merge(flag_dims, file.dims.clone()).unwrap_or_else(|| vec![[10, 10]]),
        replicates: merge(replicates, file.replicates).unwrap_or(default_replicates),
        grid_size: merge(grid_size, file.grid_size).unwrap_or(512),
        table_replicates: merge(table_replicates, file.table_replicates).unwrap_or(20_000),
        burn_in: merge(burn_in, file.burn_in).unwrap_or(500),
        spacing: merge(spacing, file.spacing).unwrap_or(10),
        r: merge(r, file.r).unwrap_or(2.0),
        seed: require_seed(merge(seed, file.seed))?,
    })
}

pub fn run_table1(args: StudyTable1Args) -> CliResult<()> {
    let file: StudyConfig = load_config(args.config.as_deref())?;
    let c = resolve_common(
        args.etas,
        args.dims,
        args.replicates,
        args.grid_size,
        args.table_replicates,
        args.burn_in,
        args.spacing,
        args.r,
        args.seed,
        &file,
        &[0.0, 0.1, 0.24],
        5000,
    )?;
    let mut rows = Vec::new();
    for (ei, &eta) in c.etas.iter().enumerate() {
        for (di, &[nr, nc]) in c.dims.iter().enumerate() {
            let cell = cell_seed(c.seed, (ei * c.dims.len() + di) as u64);
            let table = limit_table(eta, c.grid_size, c.table_replicates, c.r, cell)?;
            let q95 = table.quantiles(0.95).map_err(CliError::from)?;
            let q99 = table.quantiles(0.99).map_err(CliError::from)?;
            let stats = simulated_statistics(
                eta,
                eta,
                nr,
                nc,
                c.replicates,
                c.burn_in,
                c.spacing,
                c.r,
                EdgeRule::TruncatedNeighbors,
                cell,
            )?;
            let n_sites = nr * nc;
            for (level, quantiles) in [(0.95, q95), (0.99, q99)] {
                for j in 0..4 {
                    let exceed = stats.iter().filter(|s| s[j] > quantiles[j]).count();
                    let p = exceed as f64 / stats.len() as f64;
                    let se = (p * (1.0 - p) / stats.len() as f64).sqrt();
                    rows.push(format!(
                        "{eta},{n_sites},{},{level},{p},{se}",
                        j + 1
                    ));
                }
            }
        }
    }
    write_csv(
        "eta,n,functional,level,proportion,mc_se",
        &rows,
        args.out.as_deref(),
    )
}

// ---------------------------------------------------------------- table 2

#[derive(clap::Args, Debug)]
pub struct StudyDistanceArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    etas: Option<String>,
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    table_replicates: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    spacing: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_distance(args: StudyDistanceArgs) -> CliResult<()> {
    let file: StudyConfig = load_config(args.config.as_deref())?;
    let c = resolve_common(
        args.etas,
        args.dims,
        args.replicates,
        args.grid_size,
        args.table_replicates,
        args.burn_in,
        args.spacing,
        args.r,
        args.seed,
        &file,
        &[0.0, 0.1, 0.24],
        5000,
    )?;
    let mut rows = Vec::new();
    for (ei, &eta) in c.etas.iter().enumerate() {
        for (di, &[nr, nc]) in c.dims.iter().enumerate() {
            let cell = cell_seed(c.seed, (ei * c.dims.len() + di) as u64);
            let table = limit_table(eta, c.grid_size, c.table_replicates, c.r, cell)?;
            let stats = simulated_statistics(
                eta,
                eta,
                nr,
                nc,
                c.replicates,
                c.burn_in,
                c.spacing,
                c.r,
                EdgeRule::TruncatedNeighbors,
                cell,
            )?;
            let n_sites = nr * nc;
            for j in 0..4 {
                let finite: Vec<f64> = stats.iter().map(|s| s[j]).collect();
                let d_ks =
                    1000.0 * ks_distance(&finite, &table.draws[j]).map_err(CliError::from)?;
                let d_cm =
                    1000.0 * cm_distance(&finite, &table.draws[j]).map_err(CliError::from)?;
                rows.push(format!("{eta},{n_sites},{},{d_ks},{d_cm}", j + 1));
            }
        }
    }
    write_csv("eta,n,functional,d_ks,d_cm", &rows, args.out.as_deref())
}

// ------------------------------------------------------------------ power

#[derive(clap::Args, Debug)]
pub struct PowerArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Alternative dependence parameters
    #[arg(long)]
    etas: Option<String>,
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Test sizes, e.g. "0.01,0.05,0.1"
    #[arg(long)]
    gammas: Option<String>,
    /// Null dependence parameter (default 0)
    #[arg(long)]
    null_eta: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    table_replicates: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    spacing: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_power(args: PowerArgs) -> CliResult<()> {
    let file: StudyConfig = load_config(args.config.as_deref())?;
    let flag_gammas = args.gammas.as_deref().map(parse_f64_list).transpose()?;
    let gammas = merge(flag_gammas, file.gammas.clone())
        .unwrap_or_else(|| (1..=20).map(|i| i as f64 / 100.0).collect());
    let null_eta = merge(args.null_eta, file.null_eta).unwrap_or(0.0);
    let c = resolve_common(
        args.etas,
        args.dims,
        args.replicates,
        args.grid_size,
        args.table_replicates,
        args.burn_in,
        args.spacing,
        args.r,
        args.seed,
        &file,
        &[0.1, 0.24],
        2000,
    )?;
    if gammas.iter().any(|g| !(0.0 < *g && *g < 1.0)) {
        return Err(CliError::Config("gammas must lie in (0,1)".into()));
    }
    let mut rows = Vec::new();
    for (di, &[nr, nc]) in c.dims.iter().enumerate() {
        // one null table per window, shared across alternatives
        let null_cell = cell_seed(c.seed, 1_000_000 + di as u64);
        let table = limit_table(null_eta, c.grid_size, c.table_replicates, c.r, null_cell)?;
        for (ei, &eta) in c.etas.iter().enumerate() {
            let cell = cell_seed(c.seed, (ei * c.dims.len() + di) as u64);
            let stats = simulated_statistics(
                eta,
                null_eta,
                nr,
                nc,
                c.replicates,
                c.burn_in,
                c.spacing,
                c.r,
                EdgeRule::TruncatedNeighbors,
                cell,
            )?;
            let n_sites = nr * nc;
            for &gamma in &gammas {
                let quantiles = table.quantiles(1.0 - gamma).map_err(CliError::from)?;
                for j in 0..4 {
                    let exceed = stats.iter().filter(|s| s[j] > quantiles[j]).count();
                    let power = exceed as f64 / stats.len() as f64;
                    rows.push(format!("{eta},{n_sites},{},{gamma},{power}", j + 1));
                }
            }
        }
    }
    write_csv("eta,n,functional,gamma,power", &rows, args.out.as_deref())
}
