//! Generalized spatial residuals, conclique-wise empirical processes and
//! the four pooled goodness-of-fit statistics.
//!
//! The residual at a site is the randomized probability integral transform
//! `U(s) = (1 - A(s)) F(y | neighbors) + A(s) F^-(y | neighbors)` with
//! `A(s)` i.i.d. Uniform(0,1); under the true model the residuals within
//! one conclique are i.i.d. Uniform(0,1). Each conclique's empirical
//! distribution `G_j` yields the scaled process `W_j(u) = sqrt(N) (G_j(u) - u)`
//! with `N` the total residual count, and the statistics combine
//! Kolmogorov-Smirnov and Cramer-von-Mises functionals over concliques.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conclique::{assign_labels_on_graph, ConcliqueCover};
use crate::error::{Error, Result};
use crate::grid::GridData;
use crate::lattice::SiteGraph;
use crate::model::{EdgeRule, MrfModel};
use crate::stats::trapezoid;

/// Default evaluation grid: 1024 equispaced points on [0, 1].
pub fn default_u_grid() -> Vec<f64> {
    (0..1024).map(|i| i as f64 / 1023.0).collect()
}

/// Per-conclique generalized residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSet {
    /// One vector of residuals per conclique.
    pub per_conclique: Vec<Vec<f64>>,
    /// Total residual count `N`.
    pub n_total: usize,
    /// Evaluation grid for the integral statistics.
    pub u_grid: Vec<f64>,
}

impl ResidualSet {
    pub fn new(per_conclique: Vec<Vec<f64>>, u_grid: Vec<f64>) -> Result<Self> {
        if u_grid.len() < 2 || u_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "u_grid must be strictly increasing with at least two points".into(),
            ));
        }
        if u_grid[0] < 0.0 || *u_grid.last().expect("nonempty") > 1.0 {
            return Err(Error::InvalidParameter("u_grid must lie in [0,1]".into()));
        }
        for v in per_conclique.iter().flatten() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidParameter(format!(
                    "residual {v} outside [0,1]"
                )));
            }
        }
        let n_total = per_conclique.iter().map(|c| c.len()).sum();
        Ok(ResidualSet {
            per_conclique,
            n_total,
            u_grid,
        })
    }

    pub fn q(&self) -> usize {
        self.per_conclique.len()
    }
}

/// Computes generalized residuals for every eligible site, drawing the
/// randomization variates `A(s)` from `rng` in lexicographic site order.
pub fn generalized_residuals<R: Rng + ?Sized>(
    data: &GridData,
    model: &MrfModel,
    cover: &ConcliqueCover,
    edge_rule: EdgeRule,
    rng: &mut R,
) -> Result<ResidualSet> {
    residuals_impl(data, model, cover, edge_rule, |_site, rng_inner| {
        rng_inner.gen()
    }, rng)
}

/// Same as [`generalized_residuals`] with a fixed randomization field
/// indexed by observed-site rank (lexicographic).
pub fn generalized_residuals_with_a<R: Rng + ?Sized>(
    data: &GridData,
    model: &MrfModel,
    cover: &ConcliqueCover,
    edge_rule: EdgeRule,
    a_field: &[f64],
    rng: &mut R,
) -> Result<ResidualSet> {
    if a_field.len() != data.window().n_observed() {
        return Err(Error::InvalidParameter(format!(
            "A-field length {} does not match observed site count {}",
            a_field.len(),
            data.window().n_observed()
        )));
    }
    residuals_impl(data, model, cover, edge_rule, |site, _rng| a_field[site], rng)
}

fn residuals_impl<R, F>(
    data: &GridData,
    model: &MrfModel,
    cover: &ConcliqueCover,
    edge_rule: EdgeRule,
    mut a_of: F,
    rng: &mut R,
) -> Result<ResidualSet>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &mut R) -> f64,
{
    if cover.template() != model.template() {
        return Err(Error::CoverMismatch(
            "cover was built from a different template than the model".into(),
        ));
    }
    let window = data.window();
    let graph = SiteGraph::build(window, model.template())?;
    let interior_only = edge_rule == EdgeRule::InteriorOnly;
    let labels = assign_labels_on_graph(window, &graph, cover, interior_only);
    let values = data.observed_values();

    let mut per_conclique = vec![Vec::new(); cover.q()];
    let mut neighbor_values = Vec::with_capacity(model.template().len());
    for (i, s) in graph.sites.iter().enumerate() {
        let label = labels.per_box[window.box_index(s).expect("site in box")];
        if label < 0 {
            continue;
        }
        neighbor_values.clear();
        for &nb in &graph.neighbors[i] {
            neighbor_values.push(values[nb as usize]);
        }
        let a = a_of(i, rng);
        let y = values[i];
        let f = model.conditional_cdf(y, &neighbor_values);
        let f_left = model.conditional_cdf_left(y, &neighbor_values);
        // for continuous families F = F^- and the combination must not
        // perturb the value in the last ulp
        let u = if f == f_left {
            f
        } else {
            (1.0 - a) * f + a * f_left
        };
        per_conclique[(label - 1) as usize].push(u);
    }
    ResidualSet::new(per_conclique, default_u_grid())
}

/// Conclique-wise empirical processes on the evaluation grid, plus the
/// exact supremum of each `|W_j|` evaluated at the residual jump points.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalProcessSet {
    /// `W_j` evaluated on `u_grid`.
    pub per_conclique: Vec<Vec<f64>>,
    pub u_grid: Vec<f64>,
    pub n_total: usize,
    pub conclique_sizes: Vec<usize>,
    /// `sup_u |W_j(u)|`, exact for the piecewise-constant empirical CDF.
    pub exact_sup: Vec<f64>,
}

/// Builds the scaled empirical processes `W_j(u) = sqrt(N) (G_j(u) - u)`.
pub fn empirical_process(residuals: &ResidualSet) -> Result<EmpiricalProcessSet> {
    let n_total = residuals.n_total;
    let sqrt_n = (n_total as f64).sqrt();
    let mut per_conclique = Vec::with_capacity(residuals.q());
    let mut exact_sup = Vec::with_capacity(residuals.q());
    let mut sizes = Vec::with_capacity(residuals.q());
    for (j, raw) in residuals.per_conclique.iter().enumerate() {
        if raw.is_empty() {
            return Err(Error::EmptyConclique { index: j + 1 });
        }
        let mut sorted = raw.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("residuals are finite"));
        let n_j = sorted.len();
        let w: Vec<f64> = residuals
            .u_grid
            .iter()
            .map(|&u| {
                let count = sorted.partition_point(|&x| x <= u);
                sqrt_n * (count as f64 / n_j as f64 - u)
            })
            .collect();
        // sup of |W| at jump points: one-sided KS statistics
        let mut d_plus = f64::NEG_INFINITY;
        let mut d_minus = f64::NEG_INFINITY;
        for (i, &u) in sorted.iter().enumerate() {
            d_plus = d_plus.max((i + 1) as f64 / n_j as f64 - u);
            d_minus = d_minus.max(u - i as f64 / n_j as f64);
        }
        exact_sup.push(sqrt_n * d_plus.max(d_minus));
        sizes.push(n_j);
        per_conclique.push(w);
    }
    Ok(EmpiricalProcessSet {
        per_conclique,
        u_grid: residuals.u_grid.clone(),
        n_total,
        conclique_sizes: sizes,
        exact_sup,
    })
}

/// The four pooled goodness-of-fit statistics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofStatistics {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    /// Norm order used by the integral statistics.
    pub r: f64,
}

impl GofStatistics {
    pub fn as_array(&self) -> [f64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }
}

/// Combines the conclique processes: max and root-mean-square of the
/// exact suprema, and max and mean of the `L^r` norms computed by the
/// trapezoidal rule on the grid.
pub fn compute_statistics(processes: &EmpiricalProcessSet, r: f64) -> Result<GofStatistics> {
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "norm order r must be >= 1, got {r}"
        )));
    }
    let q = processes.per_conclique.len() as f64;
    let t1 = processes
        .exact_sup
        .iter()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let t2 = (processes.exact_sup.iter().map(|s| s * s).sum::<f64>() / q).sqrt();
    let norms: Vec<f64> = processes
        .per_conclique
        .iter()
        .map(|w| {
            let abs_r: Vec<f64> = w.iter().map(|x| x.abs().powf(r)).collect();
            trapezoid(&processes.u_grid, &abs_r).powf(1.0 / r)
        })
        .collect();
    let t3 = norms.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let t4 = norms.iter().sum::<f64>() / q;
    Ok(GofStatistics { t1, t2, t3, t4, r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conclique::build_cover;
    use crate::grid::read_grid_csv;
    use crate::lattice::NeighborhoodTemplate;
    use crate::model::{BinaryMrfSpec, GaussianMrfSpec};
    use crate::rng::{stream, substream, Purpose};
    use proptest::prelude::*;
    use rand::Rng;

    fn gauss(alpha: f64, eta: f64, tau2: f64) -> MrfModel {
        MrfModel::gaussian(
            GaussianMrfSpec::new(alpha, eta, tau2).unwrap(),
            NeighborhoodTemplate::four_nearest(),
        )
    }

    #[test]
    fn interior_residual_is_half_at_the_conditional_mean() {
        // center of a 3x3 at its conditional mean: residual = Phi(0) = 0.5
        let text = "9,1,9\n1,0.4,1\n9,1,9\n";
        let data = read_grid_csv(text.as_bytes(), false).unwrap();
        let model = gauss(0.0, 0.1, 1.0);
        let cover = build_cover(model.template());
        let mut rng = stream(3, Purpose::ResidualAField);
        let res =
            generalized_residuals(&data, &model, &cover, EdgeRule::InteriorOnly, &mut rng)
                .unwrap();
        assert_eq!(res.n_total, 1);
        let all: Vec<f64> = res.per_conclique.iter().flatten().copied().collect();
        assert!((all[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn continuous_residuals_do_not_depend_on_a_draws() {
        let model = gauss(0.0, 0.15, 1.0);
        let cover = build_cover(model.template());
        let w = crate::lattice::SamplingWindow::rect(6, 6);
        let mut rng = stream(4, Purpose::FieldSimulation);
        let field = crate::model::gibbs_simulate(&model, &w, &cover, 50, 1, 1, &mut rng)
            .unwrap()
            .remove(0);
        let mut rng_a = stream(100, Purpose::ResidualAField);
        let mut rng_b = stream(200, Purpose::ResidualAField);
        let ra = generalized_residuals(&field, &model, &cover, EdgeRule::TruncatedNeighbors, &mut rng_a)
            .unwrap();
        let rb = generalized_residuals(&field, &model, &cover, EdgeRule::TruncatedNeighbors, &mut rng_b)
            .unwrap();
        assert_eq!(ra.per_conclique, rb.per_conclique);
    }

    #[test]
    fn discrete_residuals_use_the_randomization() {
        let model = MrfModel::binary(
            BinaryMrfSpec::new(0.0, 0.4).unwrap(),
            NeighborhoodTemplate::four_nearest(),
        );
        let cover = build_cover(model.template());
        let w = crate::lattice::SamplingWindow::rect(8, 8);
        let mut rng = stream(5, Purpose::FieldSimulation);
        let field = crate::model::gibbs_simulate(&model, &w, &cover, 100, 1, 1, &mut rng)
            .unwrap()
            .remove(0);
        let mut rng_a = stream(101, Purpose::ResidualAField);
        let mut rng_b = stream(202, Purpose::ResidualAField);
        let ra = generalized_residuals(&field, &model, &cover, EdgeRule::TruncatedNeighbors, &mut rng_a)
            .unwrap();
        let rb = generalized_residuals(&field, &model, &cover, EdgeRule::TruncatedNeighbors, &mut rng_b)
            .unwrap();
        assert_ne!(ra.per_conclique, rb.per_conclique);
        for u in ra.per_conclique.iter().flatten() {
            assert!((0.0..=1.0).contains(u));
        }
    }

    #[test]
    fn edge_rules_control_residual_count() {
        let model = gauss(0.0, 0.1, 1.0);
        let cover = build_cover(model.template());
        let w = crate::lattice::SamplingWindow::rect(10, 10);
        let mut rng = stream(6, Purpose::FieldSimulation);
        let field = crate::model::gibbs_simulate(&model, &w, &cover, 50, 1, 1, &mut rng)
            .unwrap()
            .remove(0);
        let mut rng_a = substream(7, Purpose::ResidualAField, 0);
        let interior =
            generalized_residuals(&field, &model, &cover, EdgeRule::InteriorOnly, &mut rng_a)
                .unwrap();
        assert_eq!(interior.n_total, 64);
        let mut rng_b = substream(7, Purpose::ResidualAField, 1);
        let truncated = generalized_residuals(
            &field,
            &model,
            &cover,
            EdgeRule::TruncatedNeighbors,
            &mut rng_b,
        )
        .unwrap();
        assert_eq!(truncated.n_total, 100);
        let sizes: Vec<usize> = truncated.per_conclique.iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![50, 50]);
    }

    #[test]
    fn process_vanishes_at_one() {
        let res = ResidualSet::new(
            vec![vec![0.2, 0.4, 0.9]],
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
        )
        .unwrap();
        let ep = empirical_process(&res).unwrap();
        assert_eq!(*ep.per_conclique[0].last().unwrap(), 0.0);
        assert_eq!(ep.per_conclique[0][0], 0.0);
    }

    #[test]
    fn two_conclique_hand_example() {
        let res = ResidualSet::new(
            vec![vec![0.25, 0.75], vec![0.1, 0.9]],
            vec![0.0, 0.5, 1.0],
        )
        .unwrap();
        let ep = empirical_process(&res).unwrap();
        // G_1(0.5) = 0.5 so W_1(0.5) = 2 * 0 = 0
        assert_eq!(ep.per_conclique[0][1], 0.0);
        assert_eq!(ep.n_total, 4);
    }

    #[test]
    fn empty_conclique_is_reported_by_index() {
        let res = ResidualSet {
            per_conclique: vec![vec![0.5], vec![]],
            n_total: 1,
            u_grid: vec![0.0, 1.0],
        };
        match empirical_process(&res) {
            Err(Error::EmptyConclique { index }) => assert_eq!(index, 2),
            other => panic!("expected EmptyConclique, got {other:?}"),
        }
    }

    #[test]
    fn quantile_residuals_leave_almost_no_deviation() {
        let n = 1000;
        let grid_slack = 1e-9;
        let quantiles: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
        let res = ResidualSet::new(vec![quantiles], default_u_grid()).unwrap();
        let ep = empirical_process(&res).unwrap();
        let bound = (n as f64).sqrt() / (n + 1) as f64 + grid_slack;
        assert!(ep.exact_sup[0] <= bound, "{} > {bound}", ep.exact_sup[0]);
    }

    #[test]
    fn statistics_of_zero_process_are_zero() {
        let ep = EmpiricalProcessSet {
            per_conclique: vec![vec![0.0; 5], vec![0.0; 5]],
            u_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            n_total: 10,
            conclique_sizes: vec![5, 5],
            exact_sup: vec![0.0, 0.0],
        };
        let t = compute_statistics(&ep, 2.0).unwrap();
        assert_eq!(t.as_array(), [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn synthetic_constant_processes_hand_values() {
        // W_1 = 1 and W_2 = 0 on the whole grid
        let grid = default_u_grid();
        let ep = EmpiricalProcessSet {
            per_conclique: vec![vec![1.0; grid.len()], vec![0.0; grid.len()]],
            u_grid: grid,
            n_total: 8,
            conclique_sizes: vec![4, 4],
            exact_sup: vec![1.0, 0.0],
        };
        let t = compute_statistics(&ep, 2.0).unwrap();
        assert!((t.t1 - 1.0).abs() < 1e-12);
        assert!((t.t2 - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((t.t3 - 1.0).abs() < 1e-12);
        assert!((t.t4 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn q1_collapses_the_pairs() {
        let mut rng = stream(8, Purpose::ResidualAField);
        let raw: Vec<f64> = (0..40).map(|_| rng.gen()).collect();
        let res = ResidualSet::new(vec![raw], default_u_grid()).unwrap();
        let ep = empirical_process(&res).unwrap();
        let t = compute_statistics(&ep, 2.0).unwrap();
        assert!((t.t1 - t.t2).abs() < 1e-14);
        assert!((t.t3 - t.t4).abs() < 1e-14);
    }

    #[test]
    fn rejects_r_below_one() {
        let res = ResidualSet::new(vec![vec![0.5]], vec![0.0, 1.0]).unwrap();
        let ep = empirical_process(&res).unwrap();
        assert!(compute_statistics(&ep, 0.5).is_err());
    }

    /// Independent brute-force sup: evaluate |W| from first principles at
    /// every jump point and its left limit.
    fn sup_oracle(residuals: &[f64], n_total: usize) -> f64 {
        let n_j = residuals.len() as f64;
        let sqrt_n = (n_total as f64).sqrt();
        let mut best = 0.0f64;
        for &u in residuals {
            let le = residuals.iter().filter(|&&x| x <= u).count() as f64;
            let lt = residuals.iter().filter(|&&x| x < u).count() as f64;
            best = best.max((le / n_j - u).abs()).max((lt / n_j - u).abs());
        }
        sqrt_n * best
    }

    #[test]
    fn exact_sup_matches_brute_force_oracle() {
        let mut rng = stream(12, Purpose::ResidualAField);
        for trial in 0..50 {
            let n1 = 1 + (trial % 7);
            let n2 = 1 + (trial % 5);
            let c1: Vec<f64> = (0..n1).map(|_| rng.gen()).collect();
            let c2: Vec<f64> = (0..n2).map(|_| rng.gen()).collect();
            let n_total = n1 + n2;
            let res =
                ResidualSet::new(vec![c1.clone(), c2.clone()], default_u_grid()).unwrap();
            let ep = empirical_process(&res).unwrap();
            assert!((ep.exact_sup[0] - sup_oracle(&c1, n_total)).abs() < 1e-12);
            assert!((ep.exact_sup[1] - sup_oracle(&c2, n_total)).abs() < 1e-12);
        }
    }

    #[test]
    fn process_variance_scales_like_n_over_conclique_size() {
        // 10^4 replicates of 100 residuals split 50/50: Var W(0.5) = 2 * 0.25
        let reps = 10_000;
        let mut w_vals = Vec::with_capacity(reps);
        for rep in 0..reps {
            let mut rng = substream(77, Purpose::ResidualAField, rep as u64);
            let c: Vec<f64> = (0..50).map(|_| rng.gen()).collect();
            let count = c.iter().filter(|&&x| x <= 0.5).count() as f64;
            w_vals.push(100f64.sqrt() * (count / 50.0 - 0.5));
        }
        let v = crate::stats::variance(&w_vals);
        // Var of the sample variance of W ~ 2 v^2 / reps
        let se = (2.0f64 / reps as f64).sqrt() * 0.5;
        assert!((v - 0.5).abs() < 3.0 * se, "variance {v}");
        assert!(crate::stats::mean(&w_vals).abs() < 3.0 * (0.5f64 / reps as f64).sqrt());
    }

    proptest! {
        #[test]
        fn norm_inequalities_hold(
            seed in 0u64..1000,
            n1 in 1usize..60,
            n2 in 1usize..60,
        ) {
            let mut rng = substream(seed, Purpose::ResidualAField, 0);
            let c1: Vec<f64> = (0..n1).map(|_| rng.gen()).collect();
            let c2: Vec<f64> = (0..n2).map(|_| rng.gen()).collect();
            let res = ResidualSet::new(vec![c1, c2], default_u_grid()).unwrap();
            let ep = empirical_process(&res).unwrap();
            let t = compute_statistics(&ep, 2.0).unwrap();
            let q = 2.0f64;
            prop_assert!(t.t2 <= t.t1 + 1e-12);
            prop_assert!(t.t1 <= q.sqrt() * t.t2 + 1e-12);
            prop_assert!(t.t4 <= t.t3 + 1e-12);
            prop_assert!(t.t3 <= q * t.t4 + 1e-12);
        }

        #[test]
        fn statistics_invariant_under_within_conclique_permutation(
            seed in 0u64..1000
        ) {
            let mut rng = substream(seed, Purpose::ResidualAField, 1);
            let mut c1: Vec<f64> = (0..23).map(|_| rng.gen()).collect();
            let c2: Vec<f64> = (0..17).map(|_| rng.gen()).collect();
            let res = ResidualSet::new(vec![c1.clone(), c2.clone()], default_u_grid()).unwrap();
            let t_a = compute_statistics(&empirical_process(&res).unwrap(), 2.0).unwrap();
            c1.reverse();
            c1.rotate_left(7);
            let res_b = ResidualSet::new(vec![c1, c2], default_u_grid()).unwrap();
            let t_b = compute_statistics(&empirical_process(&res_b).unwrap(), 2.0).unwrap();
            prop_assert_eq!(t_a.as_array(), t_b.as_array());
        }
    }
}
