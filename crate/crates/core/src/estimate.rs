//! Conditional Gaussian MRF estimation: the neighbor incidence matrix and
//! its spectrum, the eta parameter space, exact Gaussian log-likelihood
//! through the joint form, and maximum-likelihood / pseudolikelihood fits.
//!
//! The joint law of the conditional Gaussian field on `n` sites is
//! `N(alpha 1, (I - eta H)^{-1} tau^2 I)` with `H` the 0/1 neighbor
//! incidence. `I - eta H` is positive definite exactly when
//! `eta` lies in `(1/lambda_min, 1/lambda_max)`, so the log-determinant is
//! `sum log(1 - eta lambda_i)` over the eigenvalues of `H` and the fit
//! profiles a 1-D likelihood in `eta` with `alpha`, `tau^2` maximized in
//! closed form.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridData;
use crate::lattice::{NeighborhoodTemplate, SamplingWindow, SiteGraph};

/// Sentinel half-width for the unbounded parameter space of an edgeless
/// incidence.
pub const UNBOUNDED_ETA: f64 = 1e12;

/// Largest site count for which the full spectrum of `H` is computed; above
/// this the maximum-likelihood fit falls back to pseudolikelihood.
pub const MAX_SITES_FOR_EIGEN: usize = 5000;

/// Boundary handling for the incidence matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Neighborhoods truncated at the window edge (variable neighbor counts).
    Free,
    /// Coordinates wrap modulo the window extents.
    Torus,
}

/// Symmetric 0/1 neighbor incidence of the observed sites, with its
/// spectrum (or spectral extremes when the field is too large for a full
/// eigendecomposition).
#[derive(Clone, Debug)]
pub struct NeighborIncidence {
    /// Symmetrized adjacency lists defining `H`.
    sym_neighbors: Vec<Vec<u32>>,
    /// Directed per-site conditional neighbor lists (the model's `N(s)`).
    conditional_neighbors: Vec<Vec<u32>>,
    /// Ascending eigenvalues of `H`; `None` above `MAX_SITES_FOR_EIGEN`.
    eigenvalues: Option<Vec<f64>>,
    lambda_min: f64,
    lambda_max: f64,
}

impl NeighborIncidence {
    pub fn from_window(
        window: &SamplingWindow,
        template: &NeighborhoodTemplate,
        boundary: Boundary,
    ) -> Result<Self> {
        let graph = match boundary {
            Boundary::Free => SiteGraph::build(window, template)?,
            Boundary::Torus => SiteGraph::build_torus(window, template)?,
        };
        Self::from_graph(&graph)
    }

    pub fn from_graph(graph: &SiteGraph) -> Result<Self> {
        let n = graph.n_sites();
        // symmetrize: i ~ j when j is in i+M or i is in j+M
        let mut sym: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (i, list) in graph.neighbors.iter().enumerate() {
            for &j in list {
                sym[i].push(j);
                sym[j as usize].push(i as u32);
            }
        }
        for list in sym.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let (eigenvalues, lambda_min, lambda_max) = if n <= MAX_SITES_FOR_EIGEN {
            let mut h = DMatrix::<f64>::zeros(n, n);
            for (i, list) in sym.iter().enumerate() {
                for &j in list {
                    h[(i, j as usize)] = 1.0;
                }
            }
            let mut eig: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
            eig.sort_by(|a, b| a.partial_cmp(b).expect("real eigenvalues"));
            let (lo, hi) = (eig[0], eig[n - 1]);
            (Some(eig), lo, hi)
        } else {
            let (lo, hi) = extreme_eigenvalues_power(&sym);
            (None, lo, hi)
        };
        Ok(NeighborIncidence {
            sym_neighbors: sym,
            conditional_neighbors: graph.neighbors.clone(),
            eigenvalues,
            lambda_min,
            lambda_max,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.sym_neighbors.len()
    }

    pub fn has_edges(&self) -> bool {
        self.sym_neighbors.iter().any(|l| !l.is_empty())
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    pub fn lambda_extremes(&self) -> (f64, f64) {
        (self.lambda_min, self.lambda_max)
    }

    pub fn sym_neighbors(&self) -> &[Vec<u32>] {
        &self.sym_neighbors
    }

    pub fn conditional_neighbors(&self) -> &[Vec<u32>] {
        &self.conditional_neighbors
    }

    /// `H y` through the adjacency lists.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        self.sym_neighbors
            .iter()
            .map(|list| list.iter().map(|&j| y[j as usize]).sum())
            .collect()
    }
}

/// Power-method estimates of the extreme eigenvalues of a symmetric
/// adjacency, used only above the dense-eigen size limit.
fn extreme_eigenvalues_power(sym: &[Vec<u32>]) -> (f64, f64) {
    let n = sym.len();
    let max_degree = sym.iter().map(|l| l.len()).max().unwrap_or(0) as f64;
    let shift = max_degree + 1.0;
    let dominant = |sign: f64| -> f64 {
        // iterate v <- (shift I + sign H) v, deterministic start
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.01).collect();
        let mut lambda = 0.0;
        for _ in 0..500 {
            let mut w: Vec<f64> = v.clone();
            for (i, list) in sym.iter().enumerate() {
                let s: f64 = list.iter().map(|&j| v[j as usize]).sum();
                w[i] = shift * v[i] + sign * s;
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / norm;
            }
        }
        sign * (lambda - shift)
    };
    (dominant(-1.0), dominant(1.0))
}

/// Flagged eta interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaBounds {
    pub lower: f64,
    pub upper: f64,
    /// True when `H = 0` and the interval is the sentinel.
    pub unbounded: bool,
}

/// The open interval of `eta` on which `I - eta H` is positive definite:
/// `(1/lambda_min, 1/lambda_max)`.
pub fn eta_parameter_space(incidence: &NeighborIncidence) -> EtaBounds {
    let (lo, hi) = incidence.lambda_extremes();
    if !incidence.has_edges() || lo.abs() < 1e-12 || hi.abs() < 1e-12 {
        return EtaBounds {
            lower: -UNBOUNDED_ETA,
            upper: UNBOUNDED_ETA,
            unbounded: true,
        };
    }
    EtaBounds {
        lower: 1.0 / lo,
        upper: 1.0 / hi,
        unbounded: false,
    }
}

/// Joint Gaussian log-density of the field under
/// `N(alpha 1, (I - eta H)^{-1} tau^2 I)`.
pub fn log_likelihood_gaussian(
    values: &[f64],
    alpha: f64,
    eta: f64,
    tau2: f64,
    incidence: &NeighborIncidence,
) -> Result<f64> {
    let n = incidence.n_sites();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: values.len(),
        });
    }
    if tau2 <= 0.0 {
        return Err(Error::InvalidParameter(format!("tau2 {tau2} must be > 0")));
    }
    let eig = incidence.eigenvalues().ok_or_else(|| {
        Error::InsufficientData(format!(
            "field has {n} sites, above the eigendecomposition limit"
        ))
    })?;
    let mut log_det = 0.0;
    for &l in eig {
        let factor = 1.0 - eta * l;
        if factor <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eta {eta} outside the parameter space (1 - eta*lambda = {factor})"
            )));
        }
        log_det += factor.ln();
    }
    let centered: Vec<f64> = values.iter().map(|y| y - alpha).collect();
    let h_centered = incidence.apply(&centered);
    let quad: f64 = centered
        .iter()
        .zip(&h_centered)
        .map(|(r, hr)| r * (r - eta * hr))
        .sum();
    let n_f = n as f64;
    Ok(-0.5 * n_f * (2.0 * std::f64::consts::PI * tau2).ln() + 0.5 * log_det
        - 0.5 * quad / tau2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Ml,
    Pseudolikelihood,
}

/// Fitted conditional Gaussian parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub eta: f64,
    pub tau2: f64,
    pub log_likelihood: f64,
    pub eta_bounds: (f64, f64),
    pub method: FitMethod,
    /// True when the optimizer stopped at the (shrunken) edge of the
    /// parameter space.
    pub boundary: bool,
}

const ETA_SHRINK: f64 = 1e-9;
const GOLDEN_TOL: f64 = 1e-6;
const PROFILE_GRID: usize = 50;

/// Golden-section maximization on a bracket.
fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("data contains non-finite values".into()));
    }
    Ok(())
}

/// Closed-form profile of `(alpha, tau2)` at fixed `eta` under the joint
/// Gaussian: generalized least squares for `alpha`, mean residual quadratic
/// form for `tau2`.
fn profile_alpha_tau2(values: &[f64], eta: f64, incidence: &NeighborIncidence) -> (f64, f64) {
    let n = values.len() as f64;
    let hy = incidence.apply(values);
    let degrees: Vec<f64> = incidence
        .sym_neighbors()
        .iter()
        .map(|l| l.len() as f64)
        .collect();
    let sum_y: f64 = values.iter().sum();
    let sum_hy: f64 = hy.iter().sum();
    let sum_deg: f64 = degrees.iter().sum();
    let denom = n - eta * sum_deg;
    let alpha = (sum_y - eta * sum_hy) / denom;
    let quad: f64 = values
        .iter()
        .zip(&hy)
        .zip(&degrees)
        .map(|((&y, &hy_i), &d)| {
            let r = y - alpha;
            // (H (y - alpha 1))_i = (H y)_i - alpha * degree_i
            r * (r - eta * (hy_i - alpha * d))
        })
        .sum();
    (alpha, quad / n)
}

/// Maximum-likelihood fit by profile likelihood over `eta`: a grid pre-scan
/// picks a bracket, golden-section refines it. Falls back to
/// pseudolikelihood when the field is too large for an exact spectrum.
pub fn fit_ml(values: &[f64], incidence: &NeighborIncidence) -> Result<FitResult> {
    check_finite(values)?;
    if values.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 sites to fit".into()));
    }
    if !incidence.has_edges() {
        return Err(Error::SingularDesign("neighbor incidence has no edges".into()));
    }
    if crate::stats::variance(values) <= 0.0 {
        return Err(Error::SingularDesign("constant field".into()));
    }
    if incidence.eigenvalues().is_none() {
        return fit_pseudolikelihood(values, incidence);
    }
    let bounds = eta_parameter_space(incidence);
    let lo = bounds.lower + ETA_SHRINK;
    let hi = bounds.upper - ETA_SHRINK;

    let mut profile = |eta: f64| -> f64 {
        let (alpha, tau2) = profile_alpha_tau2(values, eta, incidence);
        if tau2 <= 0.0 || !tau2.is_finite() {
            return f64::NEG_INFINITY;
        }
        match log_likelihood_gaussian(values, alpha, eta, tau2, incidence) {
            Ok(ll) => ll,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    let grid: Vec<f64> = (0..PROFILE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (PROFILE_GRID - 1) as f64)
        .collect();
    for (i, &eta) in grid.iter().enumerate() {
        let v = profile(eta);
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }
    if best_val == f64::NEG_INFINITY {
        return Err(Error::SingularDesign(
            "profile likelihood is degenerate (constant field?)".into(),
        ));
    }
    let a = if best_idx == 0 { lo } else { grid[best_idx - 1] };
    let b = if best_idx + 1 == grid.len() {
        hi
    } else {
        grid[best_idx + 1]
    };
    let eta_hat = golden_section_max(&mut profile, a, b, GOLDEN_TOL);
    let (alpha_hat, tau2_hat) = profile_alpha_tau2(values, eta_hat, incidence);
    if tau2_hat <= 0.0 || !tau2_hat.is_finite() {
        return Err(Error::SingularDesign("degenerate variance at optimum".into()));
    }
    let ll = log_likelihood_gaussian(values, alpha_hat, eta_hat, tau2_hat, incidence)?;
    let boundary = eta_hat - lo < 2.0 * GOLDEN_TOL || hi - eta_hat < 2.0 * GOLDEN_TOL;
    Ok(FitResult {
        alpha: alpha_hat,
        eta: eta_hat,
        tau2: tau2_hat,
        log_likelihood: ll,
        eta_bounds: (bounds.lower, bounds.upper),
        method: FitMethod::Ml,
        boundary,
    })
}

/// Besag-style pseudolikelihood: least squares over the conditional means
/// `alpha + eta * sum(y_neighbor - alpha)` followed by the residual
/// variance for `tau2`.
pub fn fit_pseudolikelihood(values: &[f64], incidence: &NeighborIncidence) -> Result<FitResult> {
    check_finite(values)?;
    if values.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 sites to fit".into()));
    }
    if !incidence.has_edges() {
        return Err(Error::SingularDesign("neighbor incidence has no edges".into()));
    }
    let spread = crate::stats::variance(values);
    if spread <= 0.0 || !spread.is_finite() {
        return Err(Error::SingularDesign("constant field".into()));
    }
    let n = values.len() as f64;
    let cond = incidence.conditional_neighbors();
    let nsum: Vec<f64> = cond
        .iter()
        .map(|l| l.iter().map(|&j| values[j as usize]).sum())
        .collect();
    let degrees: Vec<f64> = cond.iter().map(|l| l.len() as f64).collect();

    let bounds = eta_parameter_space(incidence);
    let lo = bounds.lower + ETA_SHRINK;
    let hi = bounds.upper - ETA_SHRINK;

    // SSE(eta) with alpha profiled: residual y - eta*nsum - alpha*(1 - eta*deg)
    let sse = |eta: f64| -> (f64, f64) {
        let mut sw2 = 0.0;
        let mut swr = 0.0;
        for i in 0..values.len() {
            let w = 1.0 - eta * degrees[i];
            let z = values[i] - eta * nsum[i];
            sw2 += w * w;
            swr += w * z;
        }
        let alpha = if sw2 > 1e-12 { swr / sw2 } else { 0.0 };
        let mut total = 0.0;
        for i in 0..values.len() {
            let r = values[i] - eta * nsum[i] - alpha * (1.0 - eta * degrees[i]);
            total += r * r;
        }
        (alpha, total)
    };

    let mut best_idx = 0;
    let mut best_val = f64::INFINITY;
    let grid: Vec<f64> = (0..PROFILE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (PROFILE_GRID - 1) as f64)
        .collect();
    for (i, &eta) in grid.iter().enumerate() {
        let (_, v) = sse(eta);
        if v < best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let a = if best_idx == 0 { lo } else { grid[best_idx - 1] };
    let b = if best_idx + 1 == grid.len() {
        hi
    } else {
        grid[best_idx + 1]
    };
    let eta_hat = golden_section_max(|eta| -sse(eta).1, a, b, GOLDEN_TOL);
    let (alpha_hat, sse_hat) = sse(eta_hat);
    let tau2_hat = sse_hat / n;
    if tau2_hat <= 0.0 || !tau2_hat.is_finite() {
        return Err(Error::SingularDesign(
            "pseudolikelihood variance is degenerate".into(),
        ));
    }
    let ll = -0.5 * n * ((2.0 * std::f64::consts::PI * tau2_hat).ln() + 1.0);
    let boundary = eta_hat - lo < 2.0 * GOLDEN_TOL || hi - eta_hat < 2.0 * GOLDEN_TOL;
    Ok(FitResult {
        alpha: alpha_hat,
        eta: eta_hat,
        tau2: tau2_hat,
        log_likelihood: ll,
        eta_bounds: (bounds.lower, bounds.upper),
        method: FitMethod::Pseudolikelihood,
        boundary,
    })
}

/// Convenience wrappers taking grid data directly.
pub fn fit_ml_grid(data: &GridData, template: &NeighborhoodTemplate) -> Result<FitResult> {
    let incidence = NeighborIncidence::from_window(data.window(), template, Boundary::Free)?;
    fit_ml(&data.observed_values(), &incidence)
}

pub fn fit_pseudolikelihood_grid(
    data: &GridData,
    template: &NeighborhoodTemplate,
) -> Result<FitResult> {
    let incidence = NeighborIncidence::from_window(data.window(), template, Boundary::Free)?;
    fit_pseudolikelihood(&data.observed_values(), &incidence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conclique::build_cover;
    use crate::model::{gibbs_simulate, GaussianMrfSpec, MrfModel};
    use crate::rng::{substream, Purpose};
    use crate::stats::{mean, variance};

    fn four_nearest() -> NeighborhoodTemplate {
        NeighborhoodTemplate::four_nearest()
    }

    fn incidence(rows: usize, cols: usize, boundary: Boundary) -> NeighborIncidence {
        let w = SamplingWindow::rect(rows, cols);
        NeighborIncidence::from_window(&w, &four_nearest(), boundary).unwrap()
    }

    #[test]
    fn eta_space_single_pair() {
        let inc = incidence(1, 2, Boundary::Free);
        let b = eta_parameter_space(&inc);
        assert!((b.lower + 1.0).abs() < 1e-10);
        assert!((b.upper - 1.0).abs() < 1e-10);
        assert!(!b.unbounded);
    }

    #[test]
    fn eta_space_11x17_free_matches_published_value() {
        let inc = incidence(11, 17, Boundary::Free);
        let b = eta_parameter_space(&inc);
        assert!((b.upper - 0.2563).abs() < 1e-4, "upper {}", b.upper);
        assert!((b.lower + 0.2563).abs() < 1e-4, "lower {}", b.lower);
    }

    #[test]
    fn eta_space_even_torus_is_exactly_quarter() {
        let inc = incidence(10, 12, Boundary::Torus);
        let b = eta_parameter_space(&inc);
        assert!((b.upper - 0.25).abs() < 1e-9, "upper {}", b.upper);
        assert!((b.lower + 0.25).abs() < 1e-9, "lower {}", b.lower);
    }

    #[test]
    fn incidence_degenerates_to_unbounded_without_edges() {
        // sites too far apart to be neighbors
        let w = SamplingWindow::with_mask(
            crate::lattice::Point(vec![0, 0]),
            crate::lattice::Point(vec![0, 3]),
            Some(vec![true, false, false, true]),
        )
        .unwrap();
        let inc = NeighborIncidence::from_window(&w, &four_nearest(), Boundary::Free).unwrap();
        let b = eta_parameter_space(&inc);
        assert!(b.unbounded);
        assert_eq!(b.upper, UNBOUNDED_ETA);
    }

    #[test]
    fn log_det_identity_on_small_windows() {
        for (rows, cols) in [(2, 3), (4, 4), (5, 8), (8, 8)] {
            let inc = incidence(rows, cols, Boundary::Free);
            let n = inc.n_sites();
            let eta = 0.17;
            let mut dense = DMatrix::<f64>::identity(n, n);
            for (i, list) in inc.sym_neighbors().iter().enumerate() {
                for &j in list {
                    dense[(i, j as usize)] = -eta;
                }
            }
            let dense_logdet = dense.lu().determinant().ln();
            let spectral: f64 = inc
                .eigenvalues()
                .unwrap()
                .iter()
                .map(|l| (1.0 - eta * l).ln())
                .sum();
            assert!(
                (dense_logdet - spectral).abs() < 1e-8,
                "{rows}x{cols}: {dense_logdet} vs {spectral}"
            );
        }
    }

    #[test]
    fn parameter_space_endpoints_cross_zero() {
        let inc = incidence(5, 5, Boundary::Free);
        let b = eta_parameter_space(&inc);
        let min_factor = |eta: f64| -> f64 {
            inc.eigenvalues()
                .unwrap()
                .iter()
                .map(|l| 1.0 - eta * l)
                .fold(f64::INFINITY, f64::min)
        };
        assert!(min_factor(b.upper - 1e-6) > 0.0);
        assert!(min_factor(b.upper + 1e-6) < 0.0);
        assert!(min_factor(b.lower + 1e-6) > 0.0);
        assert!(min_factor(b.lower - 1e-6) < 0.0);
    }

    #[test]
    fn loglik_reduces_to_iid_at_eta_zero() {
        let inc = incidence(3, 4, Boundary::Free);
        let values: Vec<f64> = (0..12).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let (alpha, tau2) = (0.4, 1.7);
        let got = log_likelihood_gaussian(&values, alpha, 0.0, tau2, &inc).unwrap();
        let want: f64 = values
            .iter()
            .map(|y| {
                -0.5 * (2.0 * std::f64::consts::PI * tau2).ln()
                    - 0.5 * (y - alpha) * (y - alpha) / tau2
            })
            .sum();
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn loglik_location_invariance() {
        let inc = incidence(4, 4, Boundary::Free);
        let values: Vec<f64> = (0..16).map(|i| (i as f64 * 0.77).sin()).collect();
        let shifted: Vec<f64> = values.iter().map(|y| y + 5.0).collect();
        let a = log_likelihood_gaussian(&values, 0.2, 0.1, 0.9, &inc).unwrap();
        let b = log_likelihood_gaussian(&shifted, 5.2, 0.1, 0.9, &inc).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn loglik_matches_dense_multivariate_normal_oracle() {
        let inc = incidence(3, 3, Boundary::Free);
        let n = 9;
        let values: Vec<f64> = vec![0.3, -1.2, 0.8, 0.1, 2.0, -0.6, 0.9, -0.4, 1.5];
        for &(alpha, eta, tau2) in &[(0.0, 0.1, 1.0), (1.3, -0.2, 2.5), (-0.7, 0.3, 0.4)] {
            let got = log_likelihood_gaussian(&values, alpha, eta, tau2, &inc).unwrap();
            // dense oracle: Sigma = (I - eta H)^{-1} tau2, direct MVN density
            let mut prec = DMatrix::<f64>::identity(n, n);
            for (i, list) in inc.sym_neighbors().iter().enumerate() {
                for &j in list {
                    prec[(i, j as usize)] = -eta;
                }
            }
            let sigma = prec.clone().try_inverse().unwrap() * tau2;
            let det = sigma.clone().lu().determinant();
            let sigma_inv = sigma.try_inverse().unwrap();
            let r = nalgebra::DVector::from_iterator(n, values.iter().map(|y| y - alpha));
            let quad = (r.transpose() * &sigma_inv * &r)[(0, 0)];
            let want = -0.5
                * (n as f64 * (2.0 * std::f64::consts::PI).ln() + det.ln() + quad);
            assert!(
                (got - want).abs() < 1e-10,
                "alpha={alpha} eta={eta}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn loglik_rejects_eta_outside_space() {
        let inc = incidence(4, 4, Boundary::Free);
        let values = vec![0.0; 16];
        assert!(log_likelihood_gaussian(&values, 0.0, 0.9, 1.0, &inc).is_err());
    }

    fn simulate_field(
        rows: usize,
        cols: usize,
        alpha: f64,
        eta: f64,
        tau2: f64,
        seed: u64,
    ) -> Vec<f64> {
        let model = MrfModel::gaussian(
            GaussianMrfSpec::new(alpha, eta, tau2).unwrap(),
            four_nearest(),
        );
        let w = SamplingWindow::rect(rows, cols);
        let cover = build_cover(&four_nearest());
        let mut rng = substream(seed, Purpose::FieldSimulation, 0);
        gibbs_simulate(&model, &w, &cover, 200, 1, 1, &mut rng).unwrap()[0].observed_values()
    }

    #[test]
    fn ml_fit_recovers_independence() {
        let inc = incidence(14, 14, Boundary::Free);
        let mut etas = Vec::new();
        let mut alphas = Vec::new();
        let mut tau2s = Vec::new();
        for rep in 0..60 {
            let values = simulate_field(14, 14, 1.0, 0.0, 2.0, 900 + rep);
            let fit = fit_ml(&values, &inc).unwrap();
            assert!(fit.eta > fit.eta_bounds.0 && fit.eta < fit.eta_bounds.1);
            etas.push(fit.eta);
            alphas.push(fit.alpha);
            tau2s.push(fit.tau2);
        }
        let se_eta = (variance(&etas) / etas.len() as f64).sqrt();
        assert!(mean(&etas).abs() < 3.0 * se_eta + 0.005, "eta {}", mean(&etas));
        let se_a = (variance(&alphas) / alphas.len() as f64).sqrt();
        assert!((mean(&alphas) - 1.0).abs() < 4.0 * se_a);
        let se_t = (variance(&tau2s) / tau2s.len() as f64).sqrt();
        assert!((mean(&tau2s) - 2.0).abs() < 4.0 * se_t + 0.02);
    }

    #[test]
    fn ml_fit_is_location_equivariant() {
        let inc = incidence(10, 10, Boundary::Free);
        let values = simulate_field(10, 10, 0.0, 0.15, 1.0, 77);
        let shifted: Vec<f64> = values.iter().map(|y| y + 3.0).collect();
        let f0 = fit_ml(&values, &inc).unwrap();
        let f1 = fit_ml(&shifted, &inc).unwrap();
        assert!((f1.alpha - f0.alpha - 3.0).abs() < 1e-5);
        assert!((f1.eta - f0.eta).abs() < 1e-5);
        assert!((f1.tau2 - f0.tau2).abs() < 1e-6);
    }

    #[test]
    fn profile_optimum_beats_a_grid_scan() {
        let inc = incidence(12, 12, Boundary::Free);
        let values = simulate_field(12, 12, 0.0, 0.2, 1.0, 41);
        let fit = fit_ml(&values, &inc).unwrap();
        let bounds = eta_parameter_space(&inc);
        let mut grid_best = f64::NEG_INFINITY;
        for i in 0..200 {
            let eta = (bounds.lower + 1e-9)
                + (bounds.upper - bounds.lower - 2e-9) * i as f64 / 199.0;
            let (alpha, tau2) = profile_alpha_tau2(&values, eta, &inc);
            if tau2 > 0.0 {
                if let Ok(ll) = log_likelihood_gaussian(&values, alpha, eta, tau2, &inc) {
                    grid_best = grid_best.max(ll);
                }
            }
        }
        assert!(grid_best <= fit.log_likelihood + 1e-6);
    }

    #[test]
    fn pseudolikelihood_agrees_with_ml_for_independent_data() {
        let inc = incidence(16, 16, Boundary::Free);
        let values = simulate_field(16, 16, 0.5, 0.0, 1.0, 4242);
        let ml = fit_ml(&values, &inc).unwrap();
        let pl = fit_pseudolikelihood(&values, &inc).unwrap();
        assert!((ml.eta - pl.eta).abs() < 0.08, "{} vs {}", ml.eta, pl.eta);
        assert!((ml.alpha - pl.alpha).abs() < 0.2);
        assert!((ml.tau2 - pl.tau2).abs() < 0.2);
    }

    #[test]
    fn constant_field_is_singular() {
        let inc = incidence(4, 4, Boundary::Free);
        let values = vec![3.0; 16];
        assert!(matches!(
            fit_pseudolikelihood(&values, &inc),
            Err(Error::SingularDesign(_))
        ));
        assert!(fit_ml(&values, &inc).is_err());
    }

    #[test]
    fn non_finite_data_rejected() {
        let inc = incidence(2, 2, Boundary::Free);
        let values = vec![1.0, f64::NAN, 0.0, 2.0];
        assert!(matches!(fit_ml(&values, &inc), Err(Error::NonFinite(_))));
    }

    #[test]
    fn power_method_matches_dense_extremes() {
        let inc = incidence(7, 9, Boundary::Free);
        let (lo, hi) = inc.lambda_extremes();
        let (plo, phi_) = extreme_eigenvalues_power(inc.sym_neighbors());
        assert!((lo - plo).abs() < 1e-6, "{lo} vs {plo}");
        assert!((hi - phi_).abs() < 1e-6, "{hi} vs {phi_}");
    }
}
