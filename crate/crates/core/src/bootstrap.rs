//! Composite-null testing by parametric bootstrap: fit the model, simulate
//! one long Gibbs chain under the fit, refit and recompute the statistics
//! per emitted field, and calibrate p-values and percentile intervals from
//! the replicate draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conclique::ConcliqueCover;
use crate::error::{Error, Result};
use crate::estimate::{
    fit_ml, fit_pseudolikelihood, FitMethod, FitResult, NeighborIncidence,
};
use crate::gof::{
    compute_statistics, empirical_process, generalized_residuals,
    generalized_residuals_with_a, GofStatistics,
};
use crate::grid::GridData;
use crate::lattice::{NeighborhoodTemplate, SamplingWindow};
use crate::model::{GaussianMrfSpec, GibbsChain, EdgeRule, MrfModel};
use crate::rng::{stream, substream, Purpose};
use crate::stats::quantile_type7;

/// Whether the randomization field `A(s)` is redrawn per bootstrap
/// replicate or held fixed across them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AFieldMode {
    Fresh,
    Fixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates `B`.
    pub replicates: usize,
    pub burn_in: usize,
    pub spacing: usize,
    pub seed: u64,
    pub refit_method: FitMethod,
    pub a_field_mode: AFieldMode,
    pub edge_rule: EdgeRule,
    /// Norm order for the integral statistics.
    pub r: f64,
    /// Percentile-interval coverage level.
    pub interval_level: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 5000,
            burn_in: 500,
            spacing: 10,
            seed: 0,
            refit_method: FitMethod::Ml,
            a_field_mode: AFieldMode::Fresh,
            edge_rule: EdgeRule::TruncatedNeighbors,
            r: 2.0,
            interval_level: 0.95,
        }
    }
}

/// Percentile interval per fitted parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterIntervals {
    pub alpha: (f64, f64),
    pub eta: (f64, f64),
    pub tau2: (f64, f64),
    pub level: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub p_values: [f64; 4],
    pub observed: GofStatistics,
    /// Statistics of the kept replicates, in emission order.
    pub replicate_stats: Vec<[f64; 4]>,
    /// Refitted `(alpha, eta, tau2)` per kept replicate.
    pub replicate_params: Vec<[f64; 3]>,
    pub intervals: ParameterIntervals,
    pub fit: FitResult,
    /// Replicates dropped because their refit failed.
    pub dropped: usize,
}

/// Empirical quantile interval at coverage `level` (type-7 interpolation).
pub fn percentile_interval(draws: &[f64], level: f64) -> Result<(f64, f64)> {
    if draws.is_empty() {
        return Err(Error::InsufficientData("no draws for interval".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "interval level {level} outside (0,1)"
        )));
    }
    let tail = (1.0 - level) / 2.0;
    Ok((
        quantile_type7(draws, tail)?,
        quantile_type7(draws, 1.0 - tail)?,
    ))
}

/// Add-one bootstrap p-values from replicate statistics.
pub fn bootstrap_p_values(observed: &GofStatistics, replicate_stats: &[[f64; 4]]) -> [f64; 4] {
    let obs = observed.as_array();
    let b = replicate_stats.len();
    let mut out = [0.0; 4];
    for i in 0..4 {
        let exceed = replicate_stats.iter().filter(|s| s[i] >= obs[i]).count();
        out[i] = (1 + exceed) as f64 / (b + 1) as f64;
    }
    out
}

fn refit(
    method: FitMethod,
    values: &[f64],
    incidence: &NeighborIncidence,
) -> Result<FitResult> {
    match method {
        FitMethod::Ml => fit_ml(values, incidence),
        FitMethod::Pseudolikelihood => fit_pseudolikelihood(values, incidence),
    }
}

fn statistics_under(
    data: &GridData,
    fit: &FitResult,
    template: &NeighborhoodTemplate,
    cover: &ConcliqueCover,
    config: &BootstrapConfig,
    a_field: Option<&[f64]>,
    a_stream: u64,
) -> Result<GofStatistics> {
    let model = MrfModel::gaussian(
        GaussianMrfSpec::new(fit.alpha, fit.eta, fit.tau2)?,
        template.clone(),
    );
    let mut rng = substream(config.seed, Purpose::ResidualAField, a_stream);
    let residuals = match a_field {
        Some(a) => generalized_residuals_with_a(
            data,
            &model,
            cover,
            config.edge_rule,
            a,
            &mut rng,
        )?,
        None => generalized_residuals(data, &model, cover, config.edge_rule, &mut rng)?,
    };
    compute_statistics(&empirical_process(&residuals)?, config.r)
}

/// Full composite test: fit, observed statistics, one long bootstrap chain
/// under the fit with refit-per-replicate statistics, add-one p-values and
/// percentile intervals for the parameters.
pub fn composite_test(
    data: &GridData,
    template: &NeighborhoodTemplate,
    cover: &ConcliqueCover,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    if config.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be >= 1".into()));
    }
    if config.spacing == 0 {
        return Err(Error::InvalidParameter("spacing must be >= 1".into()));
    }
    let window: &SamplingWindow = data.window();
    let incidence =
        NeighborIncidence::from_window(window, template, crate::estimate::Boundary::Free)?;
    let fit = refit(config.refit_method, &data.observed_values(), &incidence)?;

    // fixed randomization field, if requested
    let a_field: Option<Vec<f64>> = match config.a_field_mode {
        AFieldMode::Fixed => {
            let mut rng = stream(config.seed, Purpose::ResidualAField);
            Some((0..window.n_observed()).map(|_| rand::Rng::gen(&mut rng)).collect())
        }
        AFieldMode::Fresh => None,
    };

    let observed = statistics_under(
        data,
        &fit,
        template,
        cover,
        config,
        a_field.as_deref(),
        0,
    )?;

    // one long chain under the fitted model
    let model = MrfModel::gaussian(
        GaussianMrfSpec::new(fit.alpha, fit.eta, fit.tau2)?,
        template.clone(),
    );
    let mut chain_rng = stream(config.seed, Purpose::Bootstrap);
    let mut chain = GibbsChain::new(&model, window, cover, &mut chain_rng)?;
    chain.run_sweeps(config.burn_in, &mut chain_rng);
    let mut fields = Vec::with_capacity(config.replicates);
    for _ in 0..config.replicates {
        chain.run_sweeps(config.spacing, &mut chain_rng);
        fields.push(chain.snapshot());
    }

    // refit and recompute statistics per replicate
    let outcomes: Vec<Option<([f64; 4], FitResult)>> = fields
        .par_iter()
        .enumerate()
        .map(|(b, field)| {
            let star = refit(config.refit_method, &field.observed_values(), &incidence).ok()?;
            let stats = statistics_under(
                field,
                &star,
                template,
                cover,
                config,
                a_field.as_deref(),
                (b + 1) as u64,
            )
            .ok()?;
            Some((stats.as_array(), star))
        })
        .collect();

    let dropped = outcomes.iter().filter(|o| o.is_none()).count();
    if dropped * 20 > config.replicates {
        return Err(Error::TooManyFailures {
            dropped,
            total: config.replicates,
        });
    }
    let kept: Vec<([f64; 4], FitResult)> = outcomes.into_iter().flatten().collect();
    let replicate_stats: Vec<[f64; 4]> = kept.iter().map(|(s, _)| *s).collect();
    let replicate_params: Vec<[f64; 3]> = kept
        .iter()
        .map(|(_, f)| [f.alpha, f.eta, f.tau2])
        .collect();
    let p_values = bootstrap_p_values(&observed, &replicate_stats);

    let alphas: Vec<f64> = replicate_params.iter().map(|p| p[0]).collect();
    let etas: Vec<f64> = replicate_params.iter().map(|p| p[1]).collect();
    let tau2s: Vec<f64> = replicate_params.iter().map(|p| p[2]).collect();
    let intervals = ParameterIntervals {
        alpha: percentile_interval(&alphas, config.interval_level)?,
        eta: percentile_interval(&etas, config.interval_level)?,
        tau2: percentile_interval(&tau2s, config.interval_level)?,
        level: config.interval_level,
    };

    Ok(BootstrapResult {
        p_values,
        observed,
        replicate_stats,
        replicate_params,
        intervals,
        fit,
        dropped,
    })
}
