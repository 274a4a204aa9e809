//! Region graphs: sites, overlapping regions and the overlap pairs that carry
//! consensus constraints.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, QtdmError, Result};

/// The four benchmark layouts. Every region has four sites and every overlap
/// two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Ring,
    Ladder,
    Torus,
    Hub,
}

impl GeometryKind {
    pub const ALL: [GeometryKind; 4] = [Self::Ring, Self::Ladder, Self::Torus, Self::Hub];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ring => "ring",
            Self::Ladder => "ladder",
            Self::Torus => "torus",
            Self::Hub => "hub",
        }
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeometryKind {
    type Err = QtdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ring" => Ok(Self::Ring),
            "ladder" => Ok(Self::Ladder),
            "torus" => Ok(Self::Torus),
            "hub" => Ok(Self::Hub),
            other => invalid(format!("unknown geometry '{other}' (expected ring, ladder, torus or hub)")),
        }
    }
}

/// An unordered overlapping pair `a < b` with its shared sites.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    pub a: usize,
    pub b: usize,
    pub shared: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionGraph {
    pub n_sites: usize,
    pub regions: Vec<Vec<usize>>,
    pub overlaps: Vec<Overlap>,
}

fn intersection(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().filter(|s| b.binary_search(s).is_ok()).copied().collect()
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

impl RegionGraph {
    /// Builds a graph from explicit regions; every intersecting pair becomes
    /// an overlap.
    pub fn from_regions(n_sites: usize, regions: Vec<Vec<usize>>) -> Result<Self> {
        let regions: Vec<Vec<usize>> = regions.into_iter().map(sorted).collect();
        let mut overlaps = Vec::new();
        for a in 0..regions.len() {
            for b in (a + 1)..regions.len() {
                let shared = intersection(&regions[a], &regions[b]);
                if !shared.is_empty() {
                    overlaps.push(Overlap { a, b, shared });
                }
            }
        }
        let g = Self { n_sites, regions, overlaps };
        g.validate().into_result()?;
        Ok(g)
    }

    /// Like [`Self::from_regions`] but with an explicit list of consensus pairs.
    pub fn with_pairs(n_sites: usize, regions: Vec<Vec<usize>>, pairs: &[(usize, usize)]) -> Result<Self> {
        let regions: Vec<Vec<usize>> = regions.into_iter().map(sorted).collect();
        let mut overlaps = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            let (a, b) = (x.min(y), x.max(y));
            if b >= regions.len() {
                return invalid(format!("pair ({x}, {y}) references a missing region"));
            }
            overlaps.push(Overlap { a, b, shared: intersection(&regions[a], &regions[b]) });
        }
        overlaps.sort_by_key(|o| (o.a, o.b));
        let g = Self { n_sites, regions, overlaps };
        g.validate().into_result()?;
        Ok(g)
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn region_qubits(&self, r: usize) -> usize {
        self.regions[r].len()
    }

    /// Overlap indices touching region `r`, with `r`'s partner.
    pub fn neighbors(&self, r: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.overlaps.iter().enumerate().filter_map(move |(i, o)| {
            if o.a == r {
                Some((i, o.b))
            } else if o.b == r {
                Some((i, o.a))
            } else {
                None
            }
        })
    }

    pub fn degree(&self, r: usize) -> usize {
        self.neighbors(r).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n_regions()).map(|r| self.degree(r)).max().unwrap_or(0)
    }

    /// Σ over unordered pairs of `4^{q_rr'}`: the real dimension of one copy
    /// of every consensus variable.
    pub fn consensus_dim(&self) -> usize {
        self.overlaps.iter().map(|o| 1usize << (2 * o.shared.len())).sum()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (r, region) in self.regions.iter().enumerate() {
            if region.is_empty() {
                violations.push(format!("region {r} is empty"));
            }
            if region.windows(2).any(|w| w[0] >= w[1]) {
                violations.push(format!("region {r} sites {region:?} are not strictly ascending"));
            }
            if let Some(&s) = region.iter().find(|&&s| s >= self.n_sites) {
                violations.push(format!("region {r} references site {s} >= n_sites {}", self.n_sites));
            }
        }
        let covered: BTreeSet<usize> = self.regions.iter().flatten().copied().collect();
        for s in 0..self.n_sites {
            if !covered.contains(&s) {
                violations.push(format!("site {s} is not covered by any region"));
            }
        }
        let mut seen = BTreeSet::new();
        for o in &self.overlaps {
            if o.a >= self.regions.len() || o.b >= self.regions.len() {
                violations.push(format!("overlap ({}, {}) references a missing region", o.a, o.b));
                continue;
            }
            if o.a == o.b {
                violations.push(format!("overlap ({}, {}) pairs a region with itself", o.a, o.b));
            }
            let key = (o.a.min(o.b), o.a.max(o.b));
            if !seen.insert(key) {
                violations.push(format!("duplicate overlap ({}, {})", key.0, key.1));
            }
            let actual = intersection(&self.regions[o.a], &self.regions[o.b]);
            if actual.is_empty() {
                violations.push(format!("overlap ({}, {}) has an empty intersection", o.a, o.b));
            }
            if actual != o.shared {
                violations.push(format!(
                    "overlap ({}, {}) stores shared sites {:?} but the regions intersect in {:?}",
                    o.a, o.b, o.shared, actual
                ));
            }
        }
        ValidationReport { violations }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            Ok(())
        } else {
            invalid(format!("invalid region graph: {}", self.violations.join("; ")))
        }
    }
}

pub fn build_geometry(kind: GeometryKind) -> RegionGraph {
    let g = match kind {
        GeometryKind::Ring => {
            let regions = (0..6).map(|r| (0..4).map(|k| (2 * r + k) % 12).collect()).collect();
            RegionGraph::from_regions(12, regions)
        }
        GeometryKind::Ladder => {
            // 6 columns × 2 legs, site = 2·col + leg
            let regions = (0..6)
                .map(|r| {
                    [r, (r + 1) % 6]
                        .iter()
                        .flat_map(|&col| [2 * col, 2 * col + 1])
                        .collect()
                })
                .collect();
            RegionGraph::from_regions(12, regions)
        }
        GeometryKind::Torus => {
            // 4×4 lattice, site = 4·row + col; 3×3 grid of 2×2 plaquettes
            let mut regions = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    regions.push(vec![4 * i + j, 4 * i + j + 1, 4 * (i + 1) + j, 4 * (i + 1) + j + 1]);
                }
            }
            // edge-adjacent plaquettes only: diagonal neighbours share one site
            let mut pairs = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    let p = 3 * i + j;
                    if j + 1 < 3 {
                        pairs.push((p, p + 1));
                    }
                    if i + 1 < 3 {
                        pairs.push((p, p + 3));
                    }
                }
            }
            RegionGraph::with_pairs(16, regions, &pairs)
        }
        GeometryKind::Hub => {
            let regions = (0..6).map(|r| vec![0, 1, 2 + 2 * r, 3 + 2 * r]).collect();
            RegionGraph::from_regions(14, regions)
        }
    };
    g.expect("built-in geometries are valid")
}
