//! `simulate`: draw fields from a conditional model by conclique-blocked
//! Gibbs sampling.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use conclique_gof::conclique::build_cover;
use conclique_gof::grid::write_grid_file;
use conclique_gof::lattice::SamplingWindow;
use conclique_gof::model::gibbs_simulate;
use conclique_gof::rng::{stream, Purpose};

use crate::config::{load_config, merge, require, require_seed, ModelSpec, TemplateSpec};
use crate::error::{CliError, CliResult};

#[derive(clap::Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    template: Option<TemplateSpec>,
    /// gaussian or binary
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
    burn_in: Option<usize>,
    #[arg(long)]
    spacing: Option<usize>,
    #[arg(long)]
    n_fields: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; with n_fields > 1 it must contain `{}` for the index
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    rows: Option<usize>,
    cols: Option<usize>,
    template: Option<TemplateSpec>,
    model: Option<ModelSpec>,
    burn_in: Option<usize>,
    spacing: Option<usize>,
    n_fields: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

/// Builds the model spec from `--family/--alpha/...` flags, if any were
/// given.
pub fn model_from_flags(
    family: Option<&str>,
    alpha: Option<f64>,
    eta: Option<f64>,
    tau2: Option<f64>,
    kappa: Option<f64>,
) -> CliResult<Option<ModelSpec>> {
    let family = match family {
        None => {
            if alpha.is_some() || eta.is_some() || tau2.is_some() || kappa.is_some() {
                "gaussian".to_string()
            } else {
                return Ok(None);
            }
        }
        Some(f) => f.to_string(),
    };
    match family.as_str() {
        "gaussian" => Ok(Some(ModelSpec::Gaussian {
            alpha: alpha.unwrap_or(0.0),
            eta: require(eta, "eta")?,
            tau2: tau2.unwrap_or(1.0),
        })),
        "binary" => Ok(Some(ModelSpec::Binary {
            kappa: kappa.unwrap_or(0.0),
            eta: require(eta, "eta")?,
        })),
        other => Err(CliError::Config(format!(
            "unknown family {other:?}; use gaussian or binary"
        ))),
    }
}

#[derive(Serialize)]
struct Resolved {
    rows: usize,
    cols: usize,
    template: TemplateSpec,
    model: ModelSpec,
    burn_in: usize,
    spacing: usize,
    n_fields: usize,
    seed: u64,
    out: PathBuf,
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let file: SimulateConfig = load_config(args.config.as_deref())?;
    let flag_model =
        model_from_flags(args.family.as_deref(), args.alpha, args.eta, args.tau2, args.kappa)?;
    let resolved = Resolved {
        rows: require(merge(args.rows, file.rows), "rows")?,
        cols: require(merge(args.cols, file.cols), "cols")?,
        template: require(merge(args.template, file.template), "template")?,
        model: require(merge(flag_model, file.model), "model")?,
        burn_in: merge(args.burn_in, file.burn_in).unwrap_or(500),
        spacing: merge(args.spacing, file.spacing).unwrap_or(10),
        n_fields: merge(args.n_fields, file.n_fields).unwrap_or(1),
        seed: require_seed(merge(args.seed, file.seed))?,
        out: require(merge(args.out, file.out), "out")?,
    };
    let template = resolved.template.build()?;
    let model = resolved.model.build(&template)?;
    let cover = build_cover(&template);
    let window = SamplingWindow::rect(resolved.rows, resolved.cols);

    let pattern = resolved.out.to_string_lossy().to_string();
    if resolved.n_fields > 1 && !pattern.contains("{}") {
        return Err(CliError::Config(
            "with n_fields > 1, `out` must contain `{}` as the field-index placeholder".into(),
        ));
    }

    let mut rng = stream(resolved.seed, Purpose::FieldSimulation);
    let fields = gibbs_simulate(
        &model,
        &window,
        &cover,
        resolved.burn_in,
        resolved.spacing,
        resolved.n_fields,
        &mut rng,
    )?;
    for (i, field) in fields.iter().enumerate() {
        let path = if pattern.contains("{}") {
            pattern.replace("{}", &format!("{:04}", i + 1))
        } else {
            pattern.clone()
        };
        write_grid_file(field, &path)?;
    }
    Ok(())
}
