//! Conclique construction: basic sublattice concliques, the merge rule, a
//! greedy cover builder, a brute-force verifier, and site labelling.
//!
//! A conclique is a set of sites of which no two are neighbors. The basic
//! concliques for a template with per-axis maxima `m_i` are the sublattices
//! `a_j + ΔZ^d` with `Δ = diag(m_i + 1)` and the `q* = ∏(m_i+1)` offsets
//! `a_j` ranging over the box `{0..m_1}×...×{0..m_d}`. Two unions of basic
//! concliques can be merged exactly when no offset difference `a_j - a_k`
//! lands in `±M` modulo `Δ`-shifts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{NeighborhoodTemplate, Point, SamplingWindow, SiteGraph};

/// The `q*` basic sublattice concliques of a template.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicConcliqueFamily {
    template: NeighborhoodTemplate,
    /// Offsets `a_j` in lexicographic order over the box `I`.
    offsets: Vec<Point>,
}

impl BasicConcliqueFamily {
    pub fn template(&self) -> &NeighborhoodTemplate {
        &self.template
    }

    pub fn offsets(&self) -> &[Point] {
        &self.offsets
    }

    /// `q* = det(Δ)`.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Index of the basic conclique containing a site: the lexicographic
    /// rank of `s mod Δ` (componentwise nonnegative remainder).
    pub fn offset_rank(&self, s: &Point) -> usize {
        let delta = self.template.delta();
        let mut rank = 0usize;
        for (c, d) in s.0.iter().zip(&delta) {
            rank = rank * (*d as usize) + c.rem_euclid(*d) as usize;
        }
        rank
    }
}

/// Enumerates the basic concliques of a template.
pub fn basic_concliques(template: &NeighborhoodTemplate) -> BasicConcliqueFamily {
    let delta = template.delta();
    let q_star: usize = delta.iter().map(|&d| d as usize).product();
    let mut offsets = Vec::with_capacity(q_star);
    for rank in 0..q_star {
        let mut coords = vec![0i64; delta.len()];
        let mut rem = rank;
        for i in (0..delta.len()).rev() {
            coords[i] = (rem % delta[i] as usize) as i64;
            rem /= delta[i] as usize;
        }
        offsets.push(Point(coords));
    }
    BasicConcliqueFamily {
        template: template.clone(),
        offsets,
    }
}

/// Merge rule: the union of the basic concliques at `current` offsets and
/// the one at `candidate` stays a conclique iff
/// `a_j - candidate + Δs ∉ ±M` for every `a_j` in `current` and every shift
/// `s` with `‖s‖_∞ ≤ 1`.
pub fn can_merge(current: &[Point], candidate: &Point, template: &NeighborhoodTemplate) -> bool {
    let delta = template.delta();
    let d = delta.len();
    let n_shifts = 3usize.pow(d as u32);
    for a in current {
        let base = a.sub(candidate);
        for shift_rank in 0..n_shifts {
            let mut p = base.clone();
            let mut rem = shift_rank;
            for i in (0..d).rev() {
                let s_i = (rem % 3) as i64 - 1;
                rem /= 3;
                p.0[i] += delta[i] * s_i;
            }
            if template.contains_pm(&p) {
                return false;
            }
        }
    }
    true
}

/// A partition of the basic concliques into `q` merged concliques.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConcliqueCover {
    family: BasicConcliqueFamily,
    /// Disjoint index sets over the basic offsets; their union is `0..q*`.
    groups: Vec<Vec<usize>>,
}

impl ConcliqueCover {
    /// Validates that `groups` partition the basic family.
    pub fn new(family: BasicConcliqueFamily, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; family.len()];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::CoverMismatch("empty group".into()));
            }
            for &i in g {
                if i >= family.len() || seen[i] {
                    return Err(Error::CoverMismatch(format!(
                        "offset index {i} missing or repeated"
                    )));
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|&b| b) {
            return Err(Error::CoverMismatch(
                "groups do not cover all basic concliques".into(),
            ));
        }
        Ok(ConcliqueCover { family, groups })
    }

    pub fn family(&self) -> &BasicConcliqueFamily {
        &self.family
    }

    pub fn template(&self) -> &NeighborhoodTemplate {
        self.family.template()
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Number of concliques `q`.
    pub fn q(&self) -> usize {
        self.groups.len()
    }

    /// Number of basic concliques `q*`.
    pub fn q_star(&self) -> usize {
        self.family.len()
    }

    /// Group sizes `|J_j|`.
    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    /// Conclique label (0-based) of an arbitrary lattice site.
    pub fn label_of(&self, s: &Point) -> usize {
        let rank = self.family.offset_rank(s);
        self.group_of_rank(rank)
    }

    fn group_of_rank(&self, rank: usize) -> usize {
        for (j, g) in self.groups.iter().enumerate() {
            if g.contains(&rank) {
                return j;
            }
        }
        unreachable!("cover partitions the basic family")
    }

    /// Offset-rank -> group lookup table.
    pub fn rank_to_group(&self) -> Vec<usize> {
        let mut table = vec![0usize; self.q_star()];
        for (j, g) in self.groups.iter().enumerate() {
            for &i in g {
                table[i] = j;
            }
        }
        table
    }
}

/// Greedy cover construction: offsets are visited in lexicographic order
/// and each joins the first group it can merge with, else opens a new
/// group. The result is always a valid cover; minimality is reported, not
/// guaranteed.
pub fn build_cover(template: &NeighborhoodTemplate) -> ConcliqueCover {
    let family = basic_concliques(template);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (idx, offset) in family.offsets.iter().enumerate() {
        let mut placed = false;
        for g in groups.iter_mut() {
            let members: Vec<Point> = g.iter().map(|&i| family.offsets[i].clone()).collect();
            if can_merge(&members, offset, template) {
                g.push(idx);
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push(vec![idx]);
        }
    }
    ConcliqueCover { family, groups }
}

/// Brute-force conclique check: no point of the set is a neighbor of any
/// other.
pub fn verify_conclique(points: &[Point], template: &NeighborhoodTemplate) -> bool {
    use std::collections::HashSet;
    let set: HashSet<&Point> = points.iter().collect();
    for p in points {
        for m in template.offsets() {
            let t = p.add(m);
            if t != *p && set.contains(&t) {
                return false;
            }
        }
    }
    true
}

/// Conclique labels over a window: 1-based labels in box (row-major) order,
/// `-1` at masked sites and, when `interior_only` is set, at non-interior
/// sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels {
    /// Label per box site: `1..=q` or `-1`.
    pub per_box: Vec<i32>,
    /// Labelled-site count per conclique.
    pub counts: Vec<usize>,
}

/// Labels every observed site of the window with its conclique index. With
/// `interior_only`, only sites whose full neighborhood is observed are
/// labelled.
pub fn assign_labels(
    window: &SamplingWindow,
    cover: &ConcliqueCover,
    interior_only: bool,
) -> Result<Labels> {
    let graph = SiteGraph::build(window, cover.template())?;
    Ok(assign_labels_on_graph(window, &graph, cover, interior_only))
}

/// Same as [`assign_labels`] with a prebuilt site graph.
pub fn assign_labels_on_graph(
    window: &SamplingWindow,
    graph: &SiteGraph,
    cover: &ConcliqueCover,
    interior_only: bool,
) -> Labels {
    let rank_to_group = cover.rank_to_group();
    let mut per_box = vec![-1i32; window.n_box_sites()];
    let mut counts = vec![0usize; cover.q()];
    for (i, s) in graph.sites.iter().enumerate() {
        if interior_only && !graph.interior[i] {
            continue;
        }
        let j = rank_to_group[cover.family.offset_rank(s)];
        per_box[window.box_index(s).expect("site in box")] = (j + 1) as i32;
        counts[j] += 1;
    }
    Labels { per_box, counts }
}
