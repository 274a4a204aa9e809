use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::instance::Instance;
use crate::qmat::{self, tensor_povm, Povm};
use crate::regions::RegionGraph;

/// A region's side of one overlap: the partial trace onto the shared sites.
#[derive(Clone, Debug)]
pub struct Link {
    pub overlap: usize,
    /// Whether this region is the `a` (lower-index) side of the pair.
    pub is_a: bool,
    pub map: Arc<DMatrix<f64>>,
}

/// Per-region fixed data of the estimation problem.
#[derive(Clone, Debug)]
pub struct RegionData {
    pub sites: Vec<usize>,
    pub dim: usize,
    /// Born map on Hermitian coordinates, `M × dim²`.
    pub born: Arc<DMatrix<f64>>,
    pub empirical: DVector<f64>,
    pub links: Vec<Link>,
}

impl RegionData {
    pub fn n_outcomes(&self) -> usize {
        self.born.nrows()
    }

    pub fn n_coords(&self) -> usize {
        self.dim * self.dim
    }
}

/// Everything the solver needs that does not change across iterations.
#[derive(Clone, Debug)]
pub struct ProblemData {
    pub graph: RegionGraph,
    pub regions: Vec<RegionData>,
    /// Coordinate dimension of each overlap's shared subsystem.
    pub overlap_coords: Vec<usize>,
}

impl ProblemData {
    /// Uses the tensor SIC POVM on every region.
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        let mut cache: HashMap<usize, Arc<DMatrix<f64>>> = HashMap::new();
        let mut born = Vec::with_capacity(instance.n_regions());
        for r in 0..instance.n_regions() {
            let q = instance.graph.region_qubits(r);
            let b = match cache.get(&q) {
                Some(b) => b.clone(),
                None => {
                    let b = Arc::new(tensor_povm(q)?.born_matrix());
                    cache.insert(q, b.clone());
                    b
                }
            };
            born.push(b);
        }
        let empirical = instance.empirical.iter().map(|p| p.as_slice().to_vec()).collect();
        Self::build(&instance.graph, born, empirical)
    }

    /// Explicit POVMs and empirical distributions.
    pub fn with_povms(graph: &RegionGraph, povms: &[Povm], empirical: Vec<Vec<f64>>) -> Result<Self> {
        let born = povms.iter().map(|p| Arc::new(p.born_matrix())).collect();
        Self::build(graph, born, empirical)
    }

    fn build(graph: &RegionGraph, born: Vec<Arc<DMatrix<f64>>>, empirical: Vec<Vec<f64>>) -> Result<Self> {
        graph.validate().into_result()?;
        let n = graph.n_regions();
        if born.len() != n || empirical.len() != n {
            return invalid("need one POVM and one empirical distribution per region");
        }
        let mut regions: Vec<RegionData> = Vec::with_capacity(n);
        for r in 0..n {
            let sites = graph.regions[r].clone();
            let dim = 1usize << sites.len();
            if born[r].ncols() != dim * dim {
                return invalid(format!("POVM for region {r} has the wrong dimension"));
            }
            if born[r].nrows() != empirical[r].len() {
                return invalid(format!("region {r}: empirical distribution length differs from outcome count"));
            }
            regions.push(RegionData {
                sites,
                dim,
                born: born[r].clone(),
                empirical: DVector::from_vec(empirical[r].clone()),
                links: Vec::new(),
            });
        }
        let mut overlap_coords = Vec::with_capacity(graph.overlaps.len());
        for (i, o) in graph.overlaps.iter().enumerate() {
            overlap_coords.push(1usize << (2 * o.shared.len()));
            for (r, is_a) in [(o.a, true), (o.b, false)] {
                let map = Arc::new(qmat::partial_trace_map(&graph.regions[r], &o.shared)?);
                regions[r].links.push(Link { overlap: i, is_a, map });
            }
        }
        Ok(Self { graph: graph.clone(), regions, overlap_coords })
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    /// Σ over directed overlaps of the shared coordinate dimension.
    pub fn directed_consensus_dim(&self) -> usize {
        2 * self.overlap_coords.iter().sum::<usize>()
    }
}
