//! Simple-null reference distributions: the closed-form limit covariance of
//! the conclique empirical processes for the Gaussian four-nearest model, a
//! generic Monte Carlo covariance estimator, simulation of the limit
//! vector-Gaussian process with exact segment-maximum refinement, quantiles
//! and p-values, and two-sample distance metrics.
//!
//! The limit of `(W_1, ..., W_q)` is a zero-mean vector-Gaussian process
//! with `E W_j(u) W_j(v) = (det Δ / |J_j|)(min(u,v) - uv)` on the diagonal;
//! across concliques the covariance sums pair probabilities
//! `P[U(0) <= u, U(h) <= v] - uv` over the finitely many lags `h` that land
//! in the symmetrized template.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conclique::ConcliqueCover;
use crate::error::{Error, Result};
use crate::gof::GofStatistics;
use crate::lattice::{Point, SamplingWindow, SiteGraph};
use crate::model::{gibbs_simulate, EdgeRule, MrfModel};
use crate::normal::{bvn_cdf, phi_inv};
use crate::rng::{substream, Purpose};
use crate::stats::{quantile_type7, trapezoid};

/// Fewest Monte Carlo fields accepted by the generic covariance estimator.
pub const MIN_MC_FIELDS: usize = 100;

/// Escalating diagonal jitter for the covariance factorization.
const JITTER_START: f64 = 1e-12;
const JITTER_MAX: f64 = 1e-8;

/// Closed-form limit covariance for the Gaussian four-nearest model
/// (two concliques). Conclique indices are 1-based; the value is 0 by
/// convention when `u` or `v` hits an endpoint.
pub fn limit_cov_g4(u: f64, v: f64, j: usize, k: usize, eta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!(
            "covariance arguments ({u}, {v}) outside [0,1]"
        )));
    }
    if !(1..=2).contains(&j) || !(1..=2).contains(&k) {
        return Err(Error::InvalidParameter(format!(
            "conclique indices ({j}, {k}) must be in 1..=2"
        )));
    }
    if eta.abs() >= 0.25 {
        return Err(Error::InvalidParameter(format!(
            "four-nearest dependence parameter {eta} must satisfy |eta| < 0.25"
        )));
    }
    if u == 0.0 || u == 1.0 || v == 0.0 || v == 1.0 {
        return Ok(0.0);
    }
    if j == k {
        Ok(2.0 * (u.min(v) - u * v))
    } else {
        let h = phi_inv(u)?;
        let kk = phi_inv(v)?;
        Ok(8.0 * (bvn_cdf(h, kk, -eta)? - u * v))
    }
}

/// Empirical joint-tail tables for the lags that survive the template
/// indicator, grouped by field so that Monte Carlo standard errors are
/// available.
#[derive(Clone, Debug)]
pub struct MonteCarloCovariance {
    q: usize,
    det_delta: f64,
    group_sizes: Vec<usize>,
    /// Distinct lags with recorded pairs.
    lags: Vec<Point>,
    /// For each ordered conclique pair (j, k), j != k: (lag index,
    /// multiplicity) terms in the covariance sum.
    terms: Vec<Vec<(usize, usize)>>,
    /// Residual pairs per lag, stored per field: `pairs[lag][field]` is a
    /// vector of (U(s), U(s+h)).
    pairs: Vec<Vec<Vec<(f32, f32)>>>,
    n_fields: usize,
}

impl MonteCarloCovariance {
    fn term_index(q: usize, j: usize, k: usize) -> usize {
        // ordered pairs (j,k), j != k, row-major with the diagonal skipped
        (j - 1) * (q - 1) + if k > j { k - 2 } else { k - 1 }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_fields(&self) -> usize {
        self.n_fields
    }

    /// Distinct lags and their total multiplicities across a (j,k) pair sum.
    pub fn lag_multiplicities(&self, j: usize, k: usize) -> Vec<(Point, usize)> {
        let idx = Self::term_index(self.q, j, k);
        self.terms[idx]
            .iter()
            .map(|&(l, m)| (self.lags[l].clone(), m))
            .collect()
    }

    fn pair_fraction(&self, lag: usize, field: usize, u: f64, v: f64) -> f64 {
        let list = &self.pairs[lag][field];
        if list.is_empty() {
            return 0.0;
        }
        let count = list
            .iter()
            .filter(|&&(a, b)| (a as f64) <= u && (b as f64) <= v)
            .count();
        count as f64 / list.len() as f64
    }

    /// Covariance estimate with all fields pooled. Indices are 1-based.
    pub fn cov(&self, u: f64, v: f64, j: usize, k: usize) -> Result<f64> {
        self.validate(u, v, j, k)?;
        if u == 0.0 || u == 1.0 || v == 0.0 || v == 1.0 {
            return Ok(0.0);
        }
        if j == k {
            return Ok(self.det_delta / self.group_sizes[j - 1] as f64 * (u.min(v) - u * v));
        }
        let scale =
            self.det_delta / (self.group_sizes[j - 1] * self.group_sizes[k - 1]) as f64;
        let idx = Self::term_index(self.q, j, k);
        let mut total = 0.0;
        for &(lag, mult) in &self.terms[idx] {
            let mut p = 0.0;
            let mut n = 0usize;
            for field in 0..self.n_fields {
                let list = &self.pairs[lag][field];
                p += list
                    .iter()
                    .filter(|&&(a, b)| (a as f64) <= u && (b as f64) <= v)
                    .count() as f64;
                n += list.len();
            }
            total += mult as f64 * (p / n as f64 - u * v);
        }
        Ok(scale * total)
    }

    /// Per-field covariance estimates (for Monte Carlo standard errors).
    pub fn cov_per_field(&self, u: f64, v: f64, j: usize, k: usize) -> Result<Vec<f64>> {
        self.validate(u, v, j, k)?;
        if j == k {
            let value = self.det_delta / self.group_sizes[j - 1] as f64 * (u.min(v) - u * v);
            return Ok(vec![value; self.n_fields]);
        }
        let scale =
            self.det_delta / (self.group_sizes[j - 1] * self.group_sizes[k - 1]) as f64;
        let idx = Self::term_index(self.q, j, k);
        let mut out = vec![0.0; self.n_fields];
        for &(lag, mult) in &self.terms[idx] {
            for (field, acc) in out.iter_mut().enumerate() {
                *acc += mult as f64 * (self.pair_fraction(lag, field, u, v) - u * v);
            }
        }
        for acc in out.iter_mut() {
            *acc *= scale;
        }
        Ok(out)
    }

    fn validate(&self, u: f64, v: f64, j: usize, k: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "covariance arguments ({u}, {v}) outside [0,1]"
            )));
        }
        if !(1..=self.q).contains(&j) || !(1..=self.q).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "conclique indices ({j}, {k}) must be in 1..={}",
                self.q
            )));
        }
        Ok(())
    }

    /// Exact joint-tail table on a grid: `table[lag][(i1, i2)]` counts pairs
    /// with `U(s) <= grid[i1]` and `U(s+h) <= grid[i2]`, via binning and a
    /// 2-D prefix sum. Grid points must be of the form `i/(G+1)`.
    fn tail_tables(&self, grid: &[f64]) -> Vec<(Vec<f64>, usize)> {
        let g = grid.len();
        let bins = g + 1;
        self.pairs
            .iter()
            .map(|per_field| {
                let mut hist = vec![0u32; bins * bins];
                let mut n = 0usize;
                for field in per_field {
                    n += field.len();
                    for &(a, b) in field {
                        // bin c: grid[c-1] < x <= grid[c], via partition point
                        let ca = grid.partition_point(|&u| u < a as f64);
                        let cb = grid.partition_point(|&u| u < b as f64);
                        hist[ca.min(bins - 1) * bins + cb.min(bins - 1)] += 1;
                    }
                }
                let mut prefix = vec![0f64; bins * bins];
                for i in 0..bins {
                    for jj in 0..bins {
                        let mut acc = hist[i * bins + jj] as f64;
                        if i > 0 {
                            acc += prefix[(i - 1) * bins + jj];
                        }
                        if jj > 0 {
                            acc += prefix[i * bins + jj - 1];
                        }
                        if i > 0 && jj > 0 {
                            acc -= prefix[(i - 1) * bins + jj - 1];
                        }
                        prefix[i * bins + jj] = acc;
                    }
                }
                (prefix, n)
            })
            .collect()
    }
}

/// Simulates `mc_fields` fields under the model and records the residual
/// pairs needed by the cross-conclique covariance sum. Pairs are collected
/// at every observed lag-`h` pair; residual randomization is drawn fresh
/// per field.
pub fn estimate_mc_covariance<R: Rng + ?Sized>(
    model: &MrfModel,
    window: &SamplingWindow,
    cover: &ConcliqueCover,
    mc_fields: usize,
    burn_in: usize,
    spacing: usize,
    rng: &mut R,
) -> Result<MonteCarloCovariance> {
    if mc_fields < MIN_MC_FIELDS {
        return Err(Error::InsufficientData(format!(
            "mc_fields {mc_fields} below the minimum {MIN_MC_FIELDS}"
        )));
    }
    let template = model.template();
    if cover.template() != template {
        return Err(Error::CoverMismatch(
            "cover was built from a different template than the model".into(),
        ));
    }
    let q = cover.q();
    let family = cover.family();
    let delta = template.delta();
    let d = template.dim();

    // enumerate the lag terms per ordered (j,k) pair
    let mut lags: Vec<Point> = Vec::new();
    let mut terms: Vec<Vec<(usize, usize)>> = Vec::new();
    let n_shifts = 3usize.pow(d as u32);
    for j in 1..=q {
        for k in 1..=q {
            if j == k {
                continue;
            }
            let mut list: Vec<(usize, usize)> = Vec::new();
            for &i in &cover.groups()[j - 1] {
                for &l in &cover.groups()[k - 1] {
                    let base = family.offsets()[l].sub(&family.offsets()[i]);
                    for shift_rank in 0..n_shifts {
                        let mut h = base.clone();
                        let mut rem = shift_rank;
                        for axis in (0..d).rev() {
                            let s = (rem % 3) as i64 - 1;
                            rem /= 3;
                            h.0[axis] += delta[axis] * s;
                        }
                        if !template.contains_pm(&h) {
                            continue;
                        }
                        let lag_idx = match lags.iter().position(|x| *x == h) {
                            Some(idx) => idx,
                            None => {
                                lags.push(h.clone());
                                lags.len() - 1
                            }
                        };
                        match list.iter_mut().find(|(l2, _)| *l2 == lag_idx) {
                            Some((_, m)) => *m += 1,
                            None => list.push((lag_idx, 1)),
                        }
                    }
                }
            }
            terms.push(list);
        }
    }

    let graph = SiteGraph::build(window, template)?;
    // partner observed-site index per (lag, site)
    let partners: Vec<Vec<Option<u32>>> = lags
        .iter()
        .map(|h| {
            graph
                .sites
                .iter()
                .map(|s| {
                    window
                        .box_index(&s.add(h))
                        .and_then(|bi| graph.obs_index[bi])
                })
                .collect()
        })
        .collect();

    let fields = gibbs_simulate(model, window, cover, burn_in, spacing, mc_fields, rng)?;
    let mut pairs: Vec<Vec<Vec<(f32, f32)>>> =
        vec![Vec::with_capacity(mc_fields); lags.len()];
    for field in &fields {
        let residuals = crate::gof::generalized_residuals(
            field,
            model,
            cover,
            EdgeRule::TruncatedNeighbors,
            rng,
        )?;
        // rebuild the flat residual vector in site order
        let mut flat = vec![0.0f64; graph.n_sites()];
        let mut cursors = vec![0usize; q];
        let labels = crate::conclique::assign_labels_on_graph(window, &graph, cover, false);
        for (i, s) in graph.sites.iter().enumerate() {
            let label = labels.per_box[window.box_index(s).expect("site in box")] as usize;
            flat[i] = residuals.per_conclique[label - 1][cursors[label - 1]];
            cursors[label - 1] += 1;
        }
        for (lag_idx, partner) in partners.iter().enumerate() {
            let mut field_pairs = Vec::new();
            for (i, p) in partner.iter().enumerate() {
                if let Some(pi) = p {
                    field_pairs.push((flat[i] as f32, flat[*pi as usize] as f32));
                }
            }
            pairs[lag_idx].push(field_pairs);
        }
    }

    Ok(MonteCarloCovariance {
        q,
        det_delta: template.det_delta() as f64,
        group_sizes: cover.group_sizes(),
        lags,
        terms,
        pairs,
        n_fields: mc_fields,
    })
}

/// Limit covariance specification for the null-process simulator.
#[derive(Clone, Debug)]
pub enum LimitCovarianceSpec {
    /// Eq-(5.1)-style closed form: two concliques, Gaussian four-nearest.
    GaussianFourNearest { eta: f64 },
    /// Independent components with scaled Brownian-bridge covariance
    /// `scale_j (min(u,v) - uv)`.
    Diagonal { scales: Vec<f64> },
    /// Monte Carlo pair-probability estimate.
    MonteCarlo(MonteCarloCovariance),
}

impl LimitCovarianceSpec {
    pub fn q(&self) -> usize {
        match self {
            LimitCovarianceSpec::GaussianFourNearest { .. } => 2,
            LimitCovarianceSpec::Diagonal { scales } => scales.len(),
            LimitCovarianceSpec::MonteCarlo(mc) => mc.q(),
        }
    }

    /// Covariance at one point; conclique indices are 1-based.
    pub fn cov(&self, u: f64, v: f64, j: usize, k: usize) -> Result<f64> {
        match self {
            LimitCovarianceSpec::GaussianFourNearest { eta } => limit_cov_g4(u, v, j, k, *eta),
            LimitCovarianceSpec::Diagonal { scales } => {
                if !(1..=scales.len()).contains(&j) || !(1..=scales.len()).contains(&k) {
                    return Err(Error::InvalidParameter(format!(
                        "conclique indices ({j}, {k}) out of range"
                    )));
                }
                if j == k {
                    Ok(scales[j - 1] * (u.min(v) - u * v))
                } else {
                    Ok(0.0)
                }
            }
            LimitCovarianceSpec::MonteCarlo(mc) => mc.cov(u, v, j, k),
        }
    }

    /// Dense covariance of the stacked process on an interior grid.
    fn assemble(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let q = self.q();
        let g = grid.len();
        let n = q * g;
        let mut c = DMatrix::<f64>::zeros(n, n);
        match self {
            LimitCovarianceSpec::MonteCarlo(mc) => {
                // fast path: exact prefix-sum tail tables per lag
                let tables = mc.tail_tables(grid);
                let bins = g + 1;
                for j in 1..=q {
                    for k in j..=q {
                        for (i1, &u) in grid.iter().enumerate() {
                            for (i2, &v) in grid.iter().enumerate() {
                                if j == k && i2 < i1 {
                                    continue;
                                }
                                let value = if j == k {
                                    mc.det_delta / mc.group_sizes[j - 1] as f64
                                        * (u.min(v) - u * v)
                                } else {
                                    let scale = mc.det_delta
                                        / (mc.group_sizes[j - 1] * mc.group_sizes[k - 1])
                                            as f64;
                                    let idx =
                                        MonteCarloCovariance::term_index(q, j, k);
                                    let mut total = 0.0;
                                    for &(lag, mult) in &mc.terms[idx] {
                                        let (prefix, count) = &tables[lag];
                                        let p = prefix[i1 * bins + i2] / *count as f64;
                                        total += mult as f64 * (p - u * v);
                                    }
                                    scale * total
                                };
                                let row = (j - 1) * g + i1;
                                let col = (k - 1) * g + i2;
                                c[(row, col)] = value;
                                c[(col, row)] = value;
                            }
                        }
                    }
                }
            }
            _ => {
                for j in 1..=q {
                    for k in j..=q {
                        for (i1, &u) in grid.iter().enumerate() {
                            for (i2, &v) in grid.iter().enumerate() {
                                if j == k && i2 < i1 {
                                    continue;
                                }
                                let value = self.cov(u, v, j, k)?;
                                let row = (j - 1) * g + i1;
                                let col = (k - 1) * g + i2;
                                c[(row, col)] = value;
                                c[(col, row)] = value;
                            }
                        }
                    }
                }
            }
        }
        Ok(c)
    }
}

/// Simulated distribution of the four limit functionals.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NullQuantileTable {
    /// Functional draws, one vector per statistic (t1..t4).
    pub draws: [Vec<f64>; 4],
    pub grid_size: usize,
    pub replicates: usize,
    pub seed: u64,
    pub r: f64,
}

impl NullQuantileTable {
    /// Type-7 quantile of one functional's draws.
    pub fn quantile(&self, functional: usize, level: f64) -> Result<f64> {
        quantile_type7(&self.draws[functional], level)
    }

    pub fn quantiles(&self, level: f64) -> Result<[f64; 4]> {
        Ok([
            self.quantile(0, level)?,
            self.quantile(1, level)?,
            self.quantile(2, level)?,
            self.quantile(3, level)?,
        ])
    }
}

/// Simulates the limit vector-Gaussian process on the interior grid
/// `u_i = i/(G+1)` and evaluates the four functionals per realization.
///
/// Suprema are refined by exact sampling of each segment's conditional
/// (Brownian-bridge) maximum, removing the grid-discretization bias;
/// integrals use the trapezoidal rule with the endpoint zeros appended.
pub fn simulate_null_quantiles(
    spec: &LimitCovarianceSpec,
    grid_size: usize,
    replicates: usize,
    r: f64,
    seed: u64,
) -> Result<NullQuantileTable> {
    if grid_size < 64 {
        return Err(Error::InvalidParameter(format!(
            "grid_size {grid_size} below the minimum 64"
        )));
    }
    if replicates < 100 {
        return Err(Error::InvalidParameter(format!(
            "replicates {replicates} below the minimum 100"
        )));
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("norm order {r} must be >= 1")));
    }
    let q = spec.q();
    let g = grid_size;
    let grid: Vec<f64> = (1..=g).map(|i| i as f64 / (g + 1) as f64).collect();
    let mut c = spec.assemble(&grid)?;
    let n = q * g;

    // An empirically estimated covariance carries sampling noise far beyond
    // the jitter ladder, so it is first projected onto the PSD cone by
    // clipping negative eigenvalues; the square-root factor comes from the
    // eigendecomposition. Analytic kernels go straight to Cholesky with
    // escalating diagonal jitter.
    let (factor, lower_triangular) = if matches!(spec, LimitCovarianceSpec::MonteCarlo(_)) {
        let eigen = c.symmetric_eigen();
        let mut f = eigen.eigenvectors;
        for (col, &lambda) in eigen.eigenvalues.iter().enumerate() {
            let scale = lambda.max(0.0).sqrt();
            for row in 0..n {
                f[(row, col)] *= scale;
            }
        }
        (f, false)
    } else {
        let mut jitter = 0.0;
        let chol = loop {
            match nalgebra::Cholesky::new(c.clone()) {
                Some(f) => break f,
                None => {
                    jitter = if jitter == 0.0 {
                        JITTER_START
                    } else {
                        jitter * 10.0
                    };
                    if jitter > JITTER_MAX {
                        return Err(Error::NotPositiveDefinite {
                            max_jitter: JITTER_MAX,
                        });
                    }
                    for i in 0..n {
                        c[(i, i)] += jitter;
                    }
                }
            }
        };
        (chol.unpack(), true)
    };
    let l = &factor;

    // segment variances for the bridge-maximum refinement, per component:
    // segments [0,u_1], [u_1,u_2], ..., [u_G,1] with W = 0 at the endpoints
    let mut seg_var = vec![vec![0.0f64; g + 1]; q];
    for j in 1..=q {
        let diag_at = |u: f64| spec.cov(u, u, j, j);
        let cross = |u: f64, v: f64| spec.cov(u, v, j, j);
        seg_var[j - 1][0] = diag_at(grid[0])?;
        for i in 1..g {
            seg_var[j - 1][i] =
                (diag_at(grid[i - 1])? + diag_at(grid[i])? - 2.0 * cross(grid[i - 1], grid[i])?)
                    .max(0.0);
        }
        seg_var[j - 1][g] = diag_at(grid[g - 1])?;
    }

    // full grid with endpoints for the trapezoidal integrals
    let mut grid_full = Vec::with_capacity(g + 2);
    grid_full.push(0.0);
    grid_full.extend_from_slice(&grid);
    grid_full.push(1.0);

    let draws: Vec<[f64; 4]> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng = substream(seed, Purpose::NullDraws, rep as u64);
            let z: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            // x = L z, lower-triangular, column-major accumulation
            let mut x = vec![0.0f64; n];
            for col in 0..n {
                let zc = z[col];
                let column = l.column(col);
                for row in col..n {
                    x[row] += column[row] * zc;
                }
            }
            let mut sups = vec![0.0f64; q];
            let mut norms = vec![0.0f64; q];
            let mut w_full = vec![0.0f64; g + 2];
            for j in 0..q {
                let w = &x[j * g..(j + 1) * g];
                // exact segment maxima of |W|: sample the conditional
                // bridge max for W and for -W on each segment
                let mut sup = 0.0f64;
                for i in 0..=g {
                    let a = if i == 0 { 0.0 } else { w[i - 1] };
                    let b = if i == g { 0.0 } else { w[i] };
                    let var = seg_var[j][i];
                    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                    let u2: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                    let disc_max = ((a - b) * (a - b) - 2.0 * var * u1.ln()).sqrt();
                    let disc_min = ((a - b) * (a - b) - 2.0 * var * u2.ln()).sqrt();
                    let seg_max = 0.5 * (a + b + disc_max);
                    let seg_min = 0.5 * (a + b - disc_min);
                    sup = sup.max(seg_max).max(-seg_min);
                }
                sups[j] = sup;

                w_full[0] = 0.0;
                w_full[1..=g].copy_from_slice(w);
                w_full[g + 1] = 0.0;
                let abs_r: Vec<f64> = w_full.iter().map(|x| x.abs().powf(r)).collect();
                norms[j] = trapezoid(&grid_full, &abs_r).powf(1.0 / r);
            }
            let qf = q as f64;
            let t1 = sups.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let t2 = (sups.iter().map(|s| s * s).sum::<f64>() / qf).sqrt();
            let t3 = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let t4 = norms.iter().sum::<f64>() / qf;
            [t1, t2, t3, t4]
        })
        .collect();

    let mut out = [
        Vec::with_capacity(replicates),
        Vec::with_capacity(replicates),
        Vec::with_capacity(replicates),
        Vec::with_capacity(replicates),
    ];
    for row in draws {
        for (slot, value) in out.iter_mut().zip(row) {
            slot.push(value);
        }
    }
    Ok(NullQuantileTable {
        draws: out,
        grid_size,
        replicates,
        seed,
        r,
    })
}

/// Add-one Monte Carlo p-values: `(1 + #{draws >= observed}) / (R + 1)`.
pub fn p_value(observed: &GofStatistics, table: &NullQuantileTable) -> [f64; 4] {
    let obs = observed.as_array();
    let mut out = [0.0; 4];
    for i in 0..4 {
        let exceed = table.draws[i].iter().filter(|&&d| d >= obs[i]).count();
        out[i] = (1 + exceed) as f64 / (table.replicates + 1) as f64;
    }
    out
}

/// Two-sample Kolmogorov-Smirnov distance, exact at the pooled jump points.
pub fn ks_distance(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::InsufficientData("empty sample in ks_distance".into()));
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut d = 0.0f64;
    while ia < a.len() || ib < b.len() {
        let t = match (a.get(ia), b.get(ib)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while ia < a.len() && a[ia] <= t {
            ia += 1;
        }
        while ib < b.len() && b[ib] <= t {
            ib += 1;
        }
        d = d.max((ia as f64 / na - ib as f64 / nb).abs());
    }
    Ok(d)
}

/// Cramer-von-Mises-style distance `[∫ (F_a - F_b)^2 dt]^{1/2}`, summed
/// exactly over the pooled order-statistic intervals.
pub fn cm_distance(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(Error::InsufficientData("empty sample in cm_distance".into()));
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    let mut pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    pooled.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
    pooled.dedup();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut total = 0.0;
    for win in pooled.windows(2) {
        let t = win[0];
        let fa = a.partition_point(|&x| x <= t) as f64 / na;
        let fb = b.partition_point(|&x| x <= t) as f64 / nb;
        total += (fa - fb) * (fa - fb) * (win[1] - win[0]);
    }
    Ok(total.sqrt())
}
