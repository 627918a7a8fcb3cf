//! Integer-lattice geometry: points, neighborhood templates, sampling
//! windows and interior-site extraction.
//!
//! A neighborhood template is a finite set of nonzero offsets `M`; the
//! neighbors of a site `s` are `s + M`. A sampling window is an axis-aligned
//! box with an optional observation mask, and the interior of a window is
//! the set of observed sites whose full neighborhood is observed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site or offset in `Z^d`. Comparison is lexicographic, which is
/// the deterministic site ordering used everywhere in this crate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct Point(pub Vec<i64>);

impl Point {
    pub fn new(coords: Vec<i64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// Chebyshev norm `max_i |s_i|`.
    pub fn norm_inf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl From<Vec<i64>> for Point {
    fn from(coords: Vec<i64>) -> Self {
        Point(coords)
    }
}

impl From<&[i64]> for Point {
    fn from(coords: &[i64]) -> Self {
        Point(coords.to_vec())
    }
}

/// Neighborhood template `M ⊂ Z^d \ {0}` together with the per-axis maxima
/// `m_i = max |s_i|` over `s ∈ M` and the diagonal lattice spacing
/// `Δ = diag(m_1+1, ..., m_d+1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodTemplate {
    offsets: Vec<Point>,
    maxima: Vec<i64>,
}

impl NeighborhoodTemplate {
    /// Builds a template from a list of offsets. The zero offset is
    /// rejected, duplicates are rejected, and all offsets must share one
    /// dimension.
    pub fn new(offsets: Vec<Point>) -> Result<Self> {
        let dim = match offsets.first() {
            Some(p) => p.dim(),
            None => return Err(Error::InvalidTemplate("template has no offsets".into())),
        };
        if dim == 0 {
            return Err(Error::InvalidTemplate("offsets must have d >= 1".into()));
        }
        let mut sorted = offsets.clone();
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::InvalidTemplate(format!(
                    "duplicate offset {:?}",
                    pair[0].0
                )));
            }
        }
        let mut maxima = vec![0i64; dim];
        for p in &offsets {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if p.0.iter().all(|&c| c == 0) {
                return Err(Error::InvalidTemplate("zero offset not allowed".into()));
            }
            for (m, &c) in maxima.iter_mut().zip(&p.0) {
                *m = (*m).max(c.abs());
            }
        }
        Ok(NeighborhoodTemplate {
            offsets: sorted,
            maxima,
        })
    }

    /// The classical 4-nearest neighbor template on `Z^2`.
    pub fn four_nearest() -> Self {
        Self::new(vec![
            Point(vec![-1, 0]),
            Point(vec![1, 0]),
            Point(vec![0, -1]),
            Point(vec![0, 1]),
        ])
        .expect("valid template")
    }

    /// The 8-nearest neighbor template: all offsets at Chebyshev distance 1.
    pub fn eight_nearest() -> Self {
        let mut offsets = Vec::new();
        for a in -1..=1i64 {
            for b in -1..=1i64 {
                if a != 0 || b != 0 {
                    offsets.push(Point(vec![a, b]));
                }
            }
        }
        Self::new(offsets).expect("valid template")
    }

    pub fn dim(&self) -> usize {
        self.maxima.len()
    }

    /// Offsets in lexicographic order.
    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Per-axis maxima `m_i`.
    pub fn maxima(&self) -> &[i64] {
        &self.maxima
    }

    /// Diagonal entries of `Δ`, i.e. `m_i + 1`.
    pub fn delta(&self) -> Vec<i64> {
        self.maxima.iter().map(|m| m + 1).collect()
    }

    /// `det(Δ) = ∏ (m_i + 1)`.
    pub fn det_delta(&self) -> i64 {
        self.maxima.iter().map(|m| m + 1).product()
    }

    /// Membership test in the symmetrized template `±M`.
    pub fn contains_pm(&self, p: &Point) -> bool {
        self.offsets.iter().any(|m| {
            m.0.iter().zip(&p.0).all(|(a, b)| a == b)
                || m.0.iter().zip(&p.0).all(|(a, b)| *a == -*b)
        })
    }
}

/// Rectangular sampling window `[lower, upper]` with an optional per-site
/// observation mask in lexicographic (row-major) order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingWindow {
    lower: Point,
    upper: Point,
    mask: Option<Vec<bool>>,
}

impl SamplingWindow {
    /// Fully observed window.
    pub fn full(lower: Point, upper: Point) -> Result<Self> {
        Self::with_mask(lower, upper, None)
    }

    /// A fully observed `rows x cols` window anchored at the origin.
    pub fn rect(rows: usize, cols: usize) -> Self {
        Self::full(
            Point(vec![0, 0]),
            Point(vec![rows as i64 - 1, cols as i64 - 1]),
        )
        .expect("valid window")
    }

    pub fn with_mask(lower: Point, upper: Point, mask: Option<Vec<bool>>) -> Result<Self> {
        if lower.dim() != upper.dim() || lower.dim() == 0 {
            return Err(Error::InvalidWindow("bounds must share dimension d >= 1".into()));
        }
        if lower.0.iter().zip(&upper.0).any(|(l, u)| l > u) {
            return Err(Error::InvalidWindow(format!(
                "lower {:?} exceeds upper {:?}",
                lower.0, upper.0
            )));
        }
        let n = Self::box_volume(&lower, &upper);
        if let Some(m) = &mask {
            if m.len() != n {
                return Err(Error::InvalidWindow(format!(
                    "mask length {} does not match site count {n}",
                    m.len()
                )));
            }
            if !m.iter().any(|&b| b) {
                return Err(Error::InvalidWindow("no observed sites".into()));
            }
        }
        Ok(SamplingWindow { lower, upper, mask })
    }

    fn box_volume(lower: &Point, upper: &Point) -> usize {
        lower
            .0
            .iter()
            .zip(&upper.0)
            .map(|(l, u)| (u - l + 1) as usize)
            .product()
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    /// Side lengths of the box.
    pub fn extents(&self) -> Vec<usize> {
        self.lower
            .0
            .iter()
            .zip(&self.upper.0)
            .map(|(l, u)| (u - l + 1) as usize)
            .collect()
    }

    /// Number of box sites, observed or not.
    pub fn n_box_sites(&self) -> usize {
        Self::box_volume(&self.lower, &self.upper)
    }

    /// Number of observed sites.
    pub fn n_observed(&self) -> usize {
        match &self.mask {
            Some(m) => m.iter().filter(|&&b| b).count(),
            None => self.n_box_sites(),
        }
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Row-major index of a point inside the box, if it lies in the box.
    pub fn box_index(&self, p: &Point) -> Option<usize> {
        if p.dim() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for i in 0..self.dim() {
            let c = p.0[i];
            if c < self.lower.0[i] || c > self.upper.0[i] {
                return None;
            }
            let extent = (self.upper.0[i] - self.lower.0[i] + 1) as usize;
            idx = idx * extent + (c - self.lower.0[i]) as usize;
        }
        Some(idx)
    }

    /// Inverse of `box_index`.
    pub fn point_at(&self, index: usize) -> Point {
        let mut coords = vec![0i64; self.dim()];
        let mut rem = index;
        for i in (0..self.dim()).rev() {
            let extent = (self.upper.0[i] - self.lower.0[i] + 1) as usize;
            coords[i] = self.lower.0[i] + (rem % extent) as i64;
            rem /= extent;
        }
        coords.into()
    }

    pub fn is_observed(&self, p: &Point) -> bool {
        match self.box_index(p) {
            None => false,
            Some(idx) => self.mask.as_ref().map_or(true, |m| m[idx]),
        }
    }

    /// All box sites in lexicographic order.
    pub fn iter_box(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.n_box_sites()).map(|i| self.point_at(i))
    }

    /// Observed sites in lexicographic order.
    pub fn iter_observed(&self) -> impl Iterator<Item = Point> + '_ {
        self.iter_box().filter(|p| self.is_observed(p))
    }
}

/// `neighbors(s, M) = { s + m : m ∈ M }`.
pub fn neighbors(s: &Point, template: &NeighborhoodTemplate) -> Result<Vec<Point>> {
    if s.dim() != template.dim() {
        return Err(Error::DimensionMismatch {
            expected: template.dim(),
            got: s.dim(),
        });
    }
    Ok(template.offsets().iter().map(|m| s.add(m)).collect())
}

/// Observed sites all of whose neighbors are observed, in lexicographic
/// order.
pub fn interior_set(window: &SamplingWindow, template: &NeighborhoodTemplate) -> Vec<Point> {
    window
        .iter_observed()
        .filter(|s| {
            template
                .offsets()
                .iter()
                .all(|m| window.is_observed(&s.add(m)))
        })
        .collect()
}

/// Precomputed site adjacency for one window and template: observed sites in
/// lexicographic order, their observed-neighbor index lists, and interior
/// flags. This is the shared substrate for Gibbs sweeps, residual
/// computation and the neighbor incidence matrix.
#[derive(Clone, Debug)]
pub struct SiteGraph {
    /// Observed sites, lexicographic.
    pub sites: Vec<Point>,
    /// Box index -> observed index.
    pub obs_index: Vec<Option<u32>>,
    /// Observed neighbors of each site (indices into `sites`).
    pub neighbors: Vec<Vec<u32>>,
    /// True when the full template neighborhood of the site is observed.
    pub interior: Vec<bool>,
}

impl SiteGraph {
    /// Free-boundary graph: neighborhoods are truncated at the window edge
    /// and at masked sites.
    pub fn build(window: &SamplingWindow, template: &NeighborhoodTemplate) -> Result<Self> {
        if window.dim() != template.dim() {
            return Err(Error::DimensionMismatch {
                expected: template.dim(),
                got: window.dim(),
            });
        }
        let n_box = window.n_box_sites();
        let mut obs_index: Vec<Option<u32>> = vec![None; n_box];
        let mut sites = Vec::with_capacity(window.n_observed());
        for p in window.iter_observed() {
            let idx = window.box_index(&p).expect("observed point in box");
            obs_index[idx] = Some(sites.len() as u32);
            sites.push(p);
        }
        let m_len = template.len();
        let mut neighbor_lists = Vec::with_capacity(sites.len());
        let mut interior = Vec::with_capacity(sites.len());
        for s in &sites {
            let mut list = Vec::with_capacity(m_len);
            for m in template.offsets() {
                let t = s.add(m);
                if let Some(bi) = window.box_index(&t) {
                    if let Some(oi) = obs_index[bi] {
                        list.push(oi);
                    }
                }
            }
            interior.push(list.len() == m_len);
            neighbor_lists.push(list);
        }
        Ok(SiteGraph {
            sites,
            obs_index,
            neighbors: neighbor_lists,
            interior,
        })
    }

    /// Torus graph: coordinates wrap modulo the window extents. Requires a
    /// fully observed window.
    pub fn build_torus(window: &SamplingWindow, template: &NeighborhoodTemplate) -> Result<Self> {
        if window.mask().is_some() {
            return Err(Error::InvalidWindow(
                "torus boundary requires a fully observed window".into(),
            ));
        }
        if window.dim() != template.dim() {
            return Err(Error::DimensionMismatch {
                expected: template.dim(),
                got: window.dim(),
            });
        }
        let extents: Vec<i64> = window.extents().iter().map(|&e| e as i64).collect();
        let sites: Vec<Point> = window.iter_box().collect();
        let obs_index: Vec<Option<u32>> = (0..sites.len()).map(|i| Some(i as u32)).collect();
        let mut neighbor_lists = Vec::with_capacity(sites.len());
        for s in &sites {
            let mut list = Vec::with_capacity(template.len());
            for m in template.offsets() {
                let wrapped: Vec<i64> = s
                    .add(m)
                    .0
                    .iter()
                    .zip(window.lower().0.iter().zip(&extents))
                    .map(|(&c, (&l, &e))| l + (c - l).rem_euclid(e))
                    .collect();
                let bi = window
                    .box_index(&Point(wrapped))
                    .expect("wrapped point in box");
                list.push(bi as u32);
            }
            // Wrapping can fold distinct offsets onto one site on very small
            // windows; keep duplicates out of the incidence structure.
            list.sort_unstable();
            list.dedup();
            neighbor_lists.push(list);
        }
        let interior = vec![true; sites.len()];
        Ok(SiteGraph {
            sites,
            obs_index,
            neighbors: neighbor_lists,
            interior,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }
}
