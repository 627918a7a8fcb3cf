//! Conditional model families and conclique-blocked Gibbs simulation.
//!
//! Two families are provided: the conditional Gaussian model with mean
//! `alpha + eta * sum(y_neighbor - alpha)` and variance `tau2`, and an
//! autologistic binary family with `logit p = kappa + eta * sum(y_neighbor)`
//! that exercises the discrete branch of the randomized probability
//! integral transform. Fields are simulated by sweeping concliques: within
//! one conclique every site is conditionally independent of the others
//! given the rest of the field, so a whole conclique can be refreshed from
//! a frozen snapshot in any order.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conclique::{assign_labels_on_graph, ConcliqueCover};
use crate::error::{Error, Result};
use crate::grid::GridData;
use crate::lattice::{NeighborhoodTemplate, SamplingWindow, SiteGraph};
use crate::normal::phi;

/// How sites without a fully observed neighborhood participate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRule {
    /// Residuals only at sites whose full template neighborhood is observed.
    InteriorOnly,
    /// Every observed site participates with its observed neighbors only.
    TruncatedNeighbors,
}

/// Conditional Gaussian Markov random field parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMrfSpec {
    pub alpha: f64,
    pub eta: f64,
    pub tau2: f64,
}

impl GaussianMrfSpec {
    pub fn new(alpha: f64, eta: f64, tau2: f64) -> Result<Self> {
        if !(alpha.is_finite() && eta.is_finite() && tau2.is_finite()) {
            return Err(Error::InvalidParameter("non-finite Gaussian parameter".into()));
        }
        if tau2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tau2 must be positive, got {tau2}"
            )));
        }
        Ok(GaussianMrfSpec { alpha, eta, tau2 })
    }
}

/// Autologistic binary family on {0, 1}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryMrfSpec {
    pub kappa: f64,
    pub eta: f64,
}

impl BinaryMrfSpec {
    pub fn new(kappa: f64, eta: f64) -> Result<Self> {
        if !(kappa.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidParameter("non-finite binary parameter".into()));
        }
        Ok(BinaryMrfSpec { kappa, eta })
    }

    /// Conditional success probability given neighbor values.
    pub fn success_probability(&self, neighbor_values: &[f64]) -> f64 {
        let s: f64 = neighbor_values.iter().sum();
        let logit = self.kappa + self.eta * s;
        1.0 / (1.0 + (-logit).exp())
    }
}

/// A conditional model family with its neighborhood template.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MrfModel {
    pub family: Family,
    pub template: NeighborhoodTemplate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Gaussian(GaussianMrfSpec),
    Binary(BinaryMrfSpec),
}

/// Conditional mean of the Gaussian family: `alpha + eta * sum(y - alpha)`
/// over however many neighbors are supplied.
pub fn conditional_mean_gaussian(spec: &GaussianMrfSpec, neighbor_values: &[f64]) -> f64 {
    let centered: f64 = neighbor_values.iter().map(|y| y - spec.alpha).sum();
    spec.alpha + spec.eta * centered
}

impl MrfModel {
    pub fn gaussian(spec: GaussianMrfSpec, template: NeighborhoodTemplate) -> Self {
        MrfModel {
            family: Family::Gaussian(spec),
            template,
        }
    }

    pub fn binary(spec: BinaryMrfSpec, template: NeighborhoodTemplate) -> Self {
        MrfModel {
            family: Family::Binary(spec),
            template,
        }
    }

    pub fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    /// Conditional CDF `F(y | neighbors)`.
    pub fn conditional_cdf(&self, y: f64, neighbor_values: &[f64]) -> f64 {
        match &self.family {
            Family::Gaussian(g) => {
                let mu = conditional_mean_gaussian(g, neighbor_values);
                phi((y - mu) / g.tau2.sqrt())
            }
            Family::Binary(b) => {
                let p = b.success_probability(neighbor_values);
                if y < 0.0 {
                    0.0
                } else if y < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
        }
    }

    /// Left limit `F^-(y | neighbors) = P(Y < y | neighbors)`.
    pub fn conditional_cdf_left(&self, y: f64, neighbor_values: &[f64]) -> f64 {
        match &self.family {
            Family::Gaussian(_) => self.conditional_cdf(y, neighbor_values),
            Family::Binary(b) => {
                let p = b.success_probability(neighbor_values);
                if y <= 0.0 {
                    0.0
                } else if y <= 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
        }
    }

    /// Draws from the conditional distribution.
    pub fn conditional_sample<R: Rng + ?Sized>(
        &self,
        neighbor_values: &[f64],
        rng: &mut R,
    ) -> f64 {
        match &self.family {
            Family::Gaussian(g) => {
                let mu = conditional_mean_gaussian(g, neighbor_values);
                let z: f64 = rng.sample(StandardNormal);
                mu + g.tau2.sqrt() * z
            }
            Family::Binary(b) => {
                let p = b.success_probability(neighbor_values);
                // inverse CDF: F^{-1}(u) = 0 on u <= 1-p, else 1
                let u: f64 = rng.gen();
                if u <= 1.0 - p {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    fn initial_value<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Gaussian(g) => {
                let z: f64 = rng.sample(StandardNormal);
                g.alpha + g.tau2.sqrt() * z
            }
            Family::Binary(_) => {
                let u: f64 = rng.gen();
                if u < 0.5 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Internal Gibbs state over one window; exposes sweeps so that callers can
/// run one long chain (burn-in once, then emit with spacing).
pub struct GibbsChain<'a> {
    model: &'a MrfModel,
    window: &'a SamplingWindow,
    graph: SiteGraph,
    /// Site indices of each conclique, in lexicographic order.
    blocks: Vec<Vec<u32>>,
    state: Vec<f64>,
}

impl<'a> GibbsChain<'a> {
    pub fn new<R: Rng + ?Sized>(
        model: &'a MrfModel,
        window: &'a SamplingWindow,
        cover: &ConcliqueCover,
        rng: &mut R,
    ) -> Result<Self> {
        if cover.template() != model.template() {
            return Err(Error::CoverMismatch(
                "cover was built from a different template than the model".into(),
            ));
        }
        let graph = SiteGraph::build(window, model.template())?;
        let labels = assign_labels_on_graph(window, &graph, cover, false);
        let mut blocks = vec![Vec::new(); cover.q()];
        for (i, s) in graph.sites.iter().enumerate() {
            let label = labels.per_box[window.box_index(s).expect("site in box")];
            blocks[(label - 1) as usize].push(i as u32);
        }
        let state = (0..graph.n_sites())
            .map(|_| model.initial_value(rng))
            .collect();
        Ok(GibbsChain {
            model,
            window,
            graph,
            blocks,
            state,
        })
    }

    /// One full sweep: cycle through the concliques, refreshing every site
    /// of each conclique from the current field. No site reads another site
    /// of its own block, so in-place update equals block update.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let mut neighbor_values = Vec::with_capacity(self.model.template().len());
        for block in &self.blocks {
            for &site in block {
                neighbor_values.clear();
                for &nb in &self.graph.neighbors[site as usize] {
                    neighbor_values.push(self.state[nb as usize]);
                }
                self.state[site as usize] =
                    self.model.conditional_sample(&neighbor_values, rng);
            }
        }
    }

    pub fn run_sweeps<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) {
        for _ in 0..n {
            self.sweep(rng);
        }
    }

    /// Current state as grid data.
    pub fn snapshot(&self) -> GridData {
        let mut values = vec![f64::NAN; self.window.n_box_sites()];
        for (i, s) in self.graph.sites.iter().enumerate() {
            values[self.window.box_index(s).expect("site in box")] = self.state[i];
        }
        GridData::new(self.window.clone(), values).expect("observed values are finite")
    }

    pub fn graph(&self) -> &SiteGraph {
        &self.graph
    }
}

/// Simulates `n_fields` fields from one chain: `burn_in` sweeps are
/// discarded, then one field is emitted every `spacing` sweeps.
pub fn gibbs_simulate<R: Rng + ?Sized>(
    model: &MrfModel,
    window: &SamplingWindow,
    cover: &ConcliqueCover,
    burn_in: usize,
    spacing: usize,
    n_fields: usize,
    rng: &mut R,
) -> Result<Vec<GridData>> {
    if spacing == 0 {
        return Err(Error::InvalidParameter("spacing must be >= 1".into()));
    }
    if n_fields == 0 {
        return Err(Error::InvalidParameter("n_fields must be >= 1".into()));
    }
    let mut chain = GibbsChain::new(model, window, cover, rng)?;
    chain.run_sweeps(burn_in, rng);
    let mut fields = Vec::with_capacity(n_fields);
    for _ in 0..n_fields {
        chain.run_sweeps(spacing, rng);
        fields.push(chain.snapshot());
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conclique::build_cover;
    use crate::rng::{stream, Purpose};
    use crate::stats::{ks_uniform_pvalue, mean, variance};

    fn gauss(alpha: f64, eta: f64, tau2: f64) -> MrfModel {
        MrfModel::gaussian(
            GaussianMrfSpec::new(alpha, eta, tau2).unwrap(),
            NeighborhoodTemplate::four_nearest(),
        )
    }

    #[test]
    fn conditional_mean_examples() {
        let g = GaussianMrfSpec::new(0.0, 0.1, 1.0).unwrap();
        assert!((conditional_mean_gaussian(&g, &[1.0, 1.0, 1.0, 1.0]) - 0.4).abs() < 1e-15);

        let g = GaussianMrfSpec::new(2.0, 0.0, 1.0).unwrap();
        assert!((conditional_mean_gaussian(&g, &[5.0, -3.0]) - 2.0).abs() < 1e-15);

        // edge site with two neighbors
        let g = GaussianMrfSpec::new(2.0, 0.2, 1.0).unwrap();
        assert!((conditional_mean_gaussian(&g, &[3.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_cdf_examples() {
        let m = gauss(0.0, 0.0, 1.0);
        assert!((m.conditional_cdf(0.0, &[]) - 0.5).abs() < 1e-15);
        let m = gauss(0.0, 0.1, 1.0);
        assert!((m.conditional_cdf(0.4, &[1.0, 1.0, 1.0, 1.0]) - 0.5).abs() < 1e-15);
        // continuous family: left limit equals the cdf
        assert_eq!(
            m.conditional_cdf_left(0.73, &[1.0, 0.0]),
            m.conditional_cdf(0.73, &[1.0, 0.0])
        );
    }

    #[test]
    fn binary_cdf_is_a_step_function() {
        // pick kappa so that p = 0.3 with no neighbors
        let kappa = (0.3f64 / 0.7).ln();
        let m = MrfModel::binary(
            BinaryMrfSpec::new(kappa, 0.0).unwrap(),
            NeighborhoodTemplate::four_nearest(),
        );
        assert!((m.conditional_cdf(0.0, &[]) - 0.7).abs() < 1e-12);
        assert!((m.conditional_cdf(1.0, &[]) - 1.0).abs() < 1e-15);
        assert!((m.conditional_cdf_left(1.0, &[]) - 0.7).abs() < 1e-12);
        assert!(m.conditional_cdf_left(0.0, &[]) == 0.0);
        // monotone nondecreasing in y with limits 0 and 1
        assert_eq!(m.conditional_cdf(-0.5, &[]), 0.0);
        assert_eq!(m.conditional_cdf(7.0, &[]), 1.0);
    }

    #[test]
    fn cdf_is_monotone_with_left_limit_below() {
        let gaussian = gauss(0.3, 0.15, 2.0);
        let kappa = (0.3f64 / 0.7).ln();
        let binary = MrfModel::binary(
            BinaryMrfSpec::new(kappa, 0.2).unwrap(),
            NeighborhoodTemplate::four_nearest(),
        );
        let neighbors = [1.0, 0.0, 1.0, 1.0];
        for model in [&gaussian, &binary] {
            let mut last = 0.0f64;
            for i in -40..=40 {
                let y = i as f64 * 0.1;
                let f = model.conditional_cdf(y, &neighbors);
                let f_left = model.conditional_cdf_left(y, &neighbors);
                assert!(f_left <= f + 1e-15, "left limit exceeds cdf at y={y}");
                assert!(f + 1e-15 >= last, "cdf decreases at y={y}");
                last = f;
            }
            assert!(model.conditional_cdf(-1e6, &neighbors) < 1e-12);
            assert!(model.conditional_cdf(1e6, &neighbors) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn binary_degenerate_probability_one() {
        let m = MrfModel::binary(
            BinaryMrfSpec::new(50.0, 0.0).unwrap(),
            NeighborhoodTemplate::four_nearest(),
        );
        let mut rng = stream(1, Purpose::FieldSimulation);
        for _ in 0..100 {
            assert_eq!(m.conditional_sample(&[], &mut rng), 1.0);
        }
    }

    #[test]
    fn conditional_sample_mean_matches_alpha_when_independent() {
        let m = gauss(1.5, 0.0, 4.0);
        let mut rng = stream(11, Purpose::FieldSimulation);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| m.conditional_sample(&[], &mut rng)).collect();
        let se = (4.0f64 / n as f64).sqrt();
        assert!((mean(&draws) - 1.5).abs() < 4.0 * se);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let m = gauss(0.0, 0.1, 1.0);
        let draw = |seed: u64| -> Vec<f64> {
            let mut rng = stream(seed, Purpose::FieldSimulation);
            (0..16)
                .map(|_| m.conditional_sample(&[0.5, -0.5], &mut rng))
                .collect()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn gibbs_independent_case_reproduces_iid_field() {
        let m = gauss(2.0, 0.0, 0.49);
        let w = SamplingWindow::rect(30, 30);
        let cover = build_cover(m.template());
        let mut rng = stream(21, Purpose::FieldSimulation);
        let fields = gibbs_simulate(&m, &w, &cover, 50, 1, 12, &mut rng).unwrap();
        let cells: Vec<f64> = fields.iter().flat_map(|f| f.observed_values()).collect();
        assert_eq!(cells.len(), 10800);
        let v = variance(&cells);
        assert!((v - 0.49).abs() / 0.49 < 0.02, "variance {v}");
        // pooled PIT cells should look uniform (1% level)
        let pit: Vec<f64> = cells
            .iter()
            .map(|y| phi((y - 2.0) / 0.7))
            .collect();
        assert!(ks_uniform_pvalue(&pit[..10_000]).unwrap() > 0.01);
    }

    #[test]
    fn gibbs_is_bit_reproducible() {
        let m = gauss(0.0, 0.2, 1.0);
        let w = SamplingWindow::rect(8, 9);
        let cover = build_cover(m.template());
        let run = || {
            let mut rng = stream(5, Purpose::FieldSimulation);
            gibbs_simulate(&m, &w, &cover, 20, 3, 4, &mut rng).unwrap()
        };
        let a = run();
        let b = run();
        for (fa, fb) in a.iter().zip(&b) {
            assert_eq!(fa.observed_values(), fb.observed_values());
        }
    }

    #[test]
    fn gibbs_rejects_mismatched_cover() {
        let m = gauss(0.0, 0.1, 1.0);
        let w = SamplingWindow::rect(5, 5);
        let cover = build_cover(&NeighborhoodTemplate::eight_nearest());
        let mut rng = stream(2, Purpose::FieldSimulation);
        assert!(matches!(
            gibbs_simulate(&m, &w, &cover, 1, 1, 1, &mut rng),
            Err(Error::CoverMismatch(_))
        ));
    }

    #[test]
    fn gibbs_rejects_bad_parameters() {
        let m = gauss(0.0, 0.1, 1.0);
        let w = SamplingWindow::rect(5, 5);
        let cover = build_cover(m.template());
        let mut rng = stream(2, Purpose::FieldSimulation);
        assert!(gibbs_simulate(&m, &w, &cover, 1, 0, 1, &mut rng).is_err());
        assert!(gibbs_simulate(&m, &w, &cover, 1, 1, 0, &mut rng).is_err());
    }

    /// Raster-scan Gibbs (site order, ignoring concliques) targets the same
    /// joint law; per-field means and variances must agree with the
    /// conclique-blocked sampler.
    #[test]
    fn blocked_and_raster_scan_samplers_agree() {
        let m = gauss(0.0, 0.2, 1.0);
        let w = SamplingWindow::rect(10, 10);
        let cover = build_cover(m.template());
        let n_fields = 400;

        let mut rng = stream(33, Purpose::FieldSimulation);
        let blocked = gibbs_simulate(&m, &w, &cover, 200, 10, n_fields, &mut rng).unwrap();

        // raster variant: same conditional draws, site order 0..n each sweep
        let graph = SiteGraph::build(&w, m.template()).unwrap();
        let mut rng = stream(34, Purpose::FieldSimulation);
        let mut state: Vec<f64> = (0..graph.n_sites())
            .map(|_| m.initial_value(&mut rng))
            .collect();
        let mut raster_fields: Vec<Vec<f64>> = Vec::new();
        let sweep = |state: &mut Vec<f64>, rng: &mut rand_chacha::ChaCha8Rng| {
            for i in 0..state.len() {
                let nb: Vec<f64> = graph.neighbors[i]
                    .iter()
                    .map(|&j| state[j as usize])
                    .collect();
                state[i] = m.conditional_sample(&nb, rng);
            }
        };
        for _ in 0..200 {
            sweep(&mut state, &mut rng);
        }
        for _ in 0..n_fields {
            for _ in 0..10 {
                sweep(&mut state, &mut rng);
            }
            raster_fields.push(state.clone());
        }

        let blocked_means: Vec<f64> = blocked
            .iter()
            .map(|f| mean(&f.observed_values()))
            .collect();
        let raster_means: Vec<f64> = raster_fields.iter().map(|f| mean(f)).collect();
        let blocked_vars: Vec<f64> = blocked
            .iter()
            .map(|f| variance(&f.observed_values()))
            .collect();
        let raster_vars: Vec<f64> = raster_fields.iter().map(|f| variance(f)).collect();

        // two-sample z tests at the 1% level
        let z = |a: &[f64], b: &[f64]| {
            let se = (variance(a) / a.len() as f64 + variance(b) / b.len() as f64).sqrt();
            (mean(a) - mean(b)).abs() / se
        };
        assert!(z(&blocked_means, &raster_means) < 2.576);
        assert!(z(&blocked_vars, &raster_vars) < 2.576);
    }
}
