//! Synthetic benchmark instances: ground-truth regional states, readout
//! confusion matrices and sampled measurement records.

mod io;

pub use io::{read_array, write_array, ArrayData, ArrayFile, MAGIC};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QtdmError, Result};
use crate::qmat::{self, born, tensor_povm, ComplexMatrix, DensityMatrix, Povm, ProbabilityVector, C64};
use crate::regions::RegionGraph;

/// Largest register whose global density matrix is formed densely.
pub const GLOBAL_DENSE_MAX_QUBITS: usize = 10;
/// Largest register whose global state vector is formed.
pub const GLOBAL_VECTOR_MAX_QUBITS: usize = 24;

/// Column-stochastic readout confusion matrix: `C[m][m']` is the probability
/// of recording `m` when the ideal outcome is `m'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix(DMatrix<f64>);

impl ConfusionMatrix {
    pub const COLUMN_SUM_TOL: f64 = 1e-12;

    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return invalid(format!("confusion matrix must be square and nonempty, got {}x{}", m.nrows(), m.ncols()));
        }
        if let Some(x) = m.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return invalid(format!("confusion entry {x} outside [0, 1]"));
        }
        for (j, col) in m.column_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > Self::COLUMN_SUM_TOL {
                return invalid(format!("column {j} sums to {s}"));
            }
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn identity(m: usize) -> Self {
        Self(DMatrix::identity(m, m))
    }

    pub fn n_outcomes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `C · p`.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (&self.0 * DVector::from_column_slice(p)).iter().copied().collect()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based child seed: independent of the order in which children are
/// requested.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_mul(0x1_0000_0001).wrapping_add(index)))
}

const STREAM_STATE: u64 = 1;
const STREAM_CONFUSION: u64 = 2;
const STREAM_SAMPLING: u64 = 3;

/// Named seeds used to generate one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLedger {
    pub master: u64,
    pub state: u64,
    pub confusion: Vec<u64>,
    pub sampling: Vec<u64>,
}

impl SeedLedger {
    pub fn derive(master: u64, n_regions: usize) -> Self {
        Self {
            master,
            state: derive_seed(master, STREAM_STATE, 0),
            confusion: (0..n_regions as u64).map(|r| derive_seed(master, STREAM_CONFUSION, r)).collect(),
            sampling: (0..n_regions as u64).map(|r| derive_seed(master, STREAM_SAMPLING, r)).collect(),
        }
    }
}

/// Global ground truth `(1−ν)|ψ⟩⟨ψ| + (ν/Q)I`, kept as a state vector.
#[derive(Clone, Debug)]
pub struct GlobalState {
    pub n_qubits: usize,
    pub nu: f64,
    pub psi: Vec<C64>,
}

impl GlobalState {
    pub fn generate(n_qubits: usize, nu: f64, seed: u64) -> Result<Self> {
        check_nu(nu)?;
        if n_qubits == 0 {
            return invalid("need at least one qubit");
        }
        if n_qubits > GLOBAL_VECTOR_MAX_QUBITS {
            return Err(QtdmError::ResourceLimit(format!(
                "{n_qubits}-qubit global state exceeds the {GLOBAL_VECTOR_MAX_QUBITS}-qubit cap"
            )));
        }
        let psi = qmat::haar_state(1 << n_qubits, seed)?;
        Ok(Self { n_qubits, nu, psi })
    }

    /// Reduced state on `sites`. The mixed part reduces to `(ν/Q_r)I`.
    pub fn reduce(&self, sites: &[usize]) -> Result<DensityMatrix> {
        let all: Vec<usize> = (0..self.n_qubits).collect();
        let pure = qmat::partial_trace_pure(&self.psi, &all, sites)?;
        let dim = pure.nrows();
        let mixed = qmat::identity(dim) * C64::new(self.nu / dim as f64, 0.0);
        let mut sorted = sites.to_vec();
        sorted.sort_unstable();
        DensityMatrix::new(sorted, pure * C64::new(1.0 - self.nu, 0.0) + mixed)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if self.n_qubits > GLOBAL_DENSE_MAX_QUBITS {
            return Err(QtdmError::ResourceLimit(format!(
                "dense {}-qubit global state exceeds the {GLOBAL_DENSE_MAX_QUBITS}-qubit cap",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let v = DVector::from_column_slice(&self.psi);
        let mat: ComplexMatrix = &v * v.adjoint() * C64::new(1.0 - self.nu, 0.0)
            + qmat::identity(dim) * C64::new(self.nu / dim as f64, 0.0);
        DensityMatrix::new((0..self.n_qubits).collect(), mat)
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if !(0.0..1.0).contains(&nu) {
        return invalid(format!("mixing weight nu = {nu} outside [0, 1)"));
    }
    Ok(())
}

/// `(1−ν)U|0⟩⟨0|U† + (ν/Q)I` with `U = random_unitary(2^q, seed)`.
pub fn make_global_state(q: usize, nu: f64, seed: u64) -> Result<DensityMatrix> {
    check_nu(nu)?;
    if q > GLOBAL_DENSE_MAX_QUBITS {
        return Err(QtdmError::ResourceLimit(format!(
            "dense {q}-qubit global state exceeds the {GLOBAL_DENSE_MAX_QUBITS}-qubit cap"
        )));
    }
    GlobalState::generate(q, nu, seed)?.to_density()
}

/// Column-wise simplex projection of `I + eps·|G|` with `G` standard normal.
pub fn gen_confusion(m: usize, eps: f64, seed: u64) -> Result<ConfusionMatrix> {
    if m == 0 {
        return invalid("confusion matrix needs at least one outcome");
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return invalid(format!("perturbation scale {eps} must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = DMatrix::zeros(m, m);
    let mut col = vec![0.0; m];
    let mut scratch = Vec::with_capacity(m);
    for j in 0..m {
        for (i, x) in col.iter_mut().enumerate() {
            let g: f64 = rng.sample(StandardNormal);
            *x = if i == j { 1.0 } else { 0.0 } + eps * g.abs();
        }
        qmat::project_simplex_in_place(&mut col, &mut scratch);
        c.set_column(j, &DVector::from_column_slice(&col));
    }
    Ok(ConfusionMatrix(c))
}

/// Mean relative Frobenius distance `‖C_r − I‖_F / ‖I‖_F`.
pub fn deviation_delta_c<'a>(confusions: impl IntoIterator<Item = &'a ConfusionMatrix>) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for c in confusions {
        let m = c.matrix();
        if m.nrows() != m.ncols() {
            return invalid(format!("confusion matrix is {}x{}", m.nrows(), m.ncols()));
        }
        let dev = (m - DMatrix::<f64>::identity(m.nrows(), m.ncols())).norm();
        total += dev / (m.nrows() as f64).sqrt();
        n += 1;
    }
    if n == 0 {
        return invalid("no confusion matrices given");
    }
    Ok(total / n as f64)
}

/// Mean of `δ_C★` over `n_seeds` single-matrix draws.
pub fn mean_delta_for_eps(m: usize, eps: f64, n_seeds: usize, master_seed: u64) -> Result<f64> {
    let cs: Vec<ConfusionMatrix> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| gen_confusion(m, eps, derive_seed(master_seed, STREAM_CONFUSION, s)))
        .collect::<Result<_>>()?;
    deviation_delta_c(&cs)
}

/// Perturbation scale whose Monte-Carlo mean `δ_C★` hits `target`, found by
/// bisection (the mean is nondecreasing in `eps`).
pub fn calibrate_eps(m: usize, target: f64, n_seeds: usize, master_seed: u64) -> Result<f64> {
    if !(target >= 0.0 && target.is_finite()) {
        return invalid(format!("target deviation {target} must be finite and nonnegative"));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 0.05);
    while mean_delta_for_eps(m, hi, n_seeds, master_seed)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            return invalid(format!("deviation {target} is not reachable"));
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if mean_delta_for_eps(m, mid, n_seeds, master_seed)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome counts and the empirical distribution `counts / T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    pub counts: Vec<u64>,
    pub empirical: ProbabilityVector,
}

/// `t` categorical draws from `p` by inverse CDF.
pub fn sample_shots(p: &ProbabilityVector, t: u64, seed: u64) -> Result<ShotRecord> {
    if t == 0 {
        return invalid("need at least one shot");
    }
    let probs = ProbabilityVector::new(p.as_slice().to_vec())?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &x in probs.as_slice() {
        acc += x;
        cdf.push(acc);
    }
    let last = probs.as_slice().iter().rposition(|&x| x > 0.0).unwrap_or(probs.len() - 1);
    let mut counts = vec![0u64; probs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..t {
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        counts[idx] += 1;
    }
    let empirical = counts.iter().map(|&c| c as f64 / t as f64).collect();
    Ok(ShotRecord { counts, empirical: ProbabilityVector::from_vec_unchecked(empirical) })
}

/// Generation parameters for [`build_instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    pub nu: f64,
    pub eps: f64,
    pub shots_per_region: u64,
    pub master_seed: u64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self { nu: 0.1, eps: 0.0, shots_per_region: 10_000, master_seed: 1 }
    }
}

/// One reproducible benchmark instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub graph: RegionGraph,
    pub params: InstanceParams,
    pub seeds: SeedLedger,
    /// Present only for registers of at most [`GLOBAL_DENSE_MAX_QUBITS`].
    pub global_truth: Option<DensityMatrix>,
    pub regional_truths: Vec<DensityMatrix>,
    pub confusions_truth: Vec<ConfusionMatrix>,
    pub counts: Vec<Vec<u64>>,
    pub empirical: Vec<ProbabilityVector>,
    pub delta_c: f64,
}

impl Instance {
    pub fn n_regions(&self) -> usize {
        self.graph.n_regions()
    }

    pub fn shots(&self, _r: usize) -> u64 {
        self.params.shots_per_region
    }

    pub fn total_shots(&self) -> u64 {
        self.params.shots_per_region * self.n_regions() as u64
    }

    /// Regional POVM for region `r`.
    pub fn povm(&self, r: usize) -> Result<Povm> {
        tensor_povm(self.graph.region_qubits(r))
    }

    /// Noise-free readout distribution `C_r★ π_r(ρ_r★)`.
    pub fn noisy_distribution(&self, r: usize) -> Result<ProbabilityVector> {
        let ideal = born(&self.regional_truths[r], &self.povm(r)?)?;
        noisy_distribution(&self.confusions_truth[r], &ideal)
    }
}

/// `C π` as a probability vector.
pub fn noisy_distribution(c: &ConfusionMatrix, ideal: &ProbabilityVector) -> Result<ProbabilityVector> {
    if c.n_outcomes() != ideal.len() {
        return invalid("confusion matrix and distribution sizes differ");
    }
    ProbabilityVector::new(c.apply(ideal.as_slice()))
}

/// State → reductions → POVMs → confusions → noisy distributions → shots.
pub fn build_instance(graph: &RegionGraph, params: &InstanceParams) -> Result<Instance> {
    graph.validate().into_result()?;
    if params.shots_per_region == 0 {
        return invalid("shots per region must be positive");
    }
    let seeds = SeedLedger::derive(params.master_seed, graph.n_regions());
    let global = GlobalState::generate(graph.n_sites, params.nu, seeds.state)?;
    let global_truth = if graph.n_sites <= GLOBAL_DENSE_MAX_QUBITS { Some(global.to_density()?) } else { None };

    let per_region: Vec<(DensityMatrix, ConfusionMatrix, ShotRecord)> = (0..graph.n_regions())
        .into_par_iter()
        .map(|r| {
            let sites = &graph.regions[r];
            let rho = global.reduce(sites)?;
            let povm = tensor_povm(sites.len())?;
            let c = gen_confusion(povm.n_outcomes(), params.eps, seeds.confusion[r])?;
            let noisy = noisy_distribution(&c, &born(&rho, &povm)?)?;
            let shots = sample_shots(&noisy, params.shots_per_region, seeds.sampling[r])?;
            Ok((rho, c, shots))
        })
        .collect::<Result<_>>()?;

    let mut regional_truths = Vec::with_capacity(per_region.len());
    let mut confusions_truth = Vec::with_capacity(per_region.len());
    let mut counts = Vec::with_capacity(per_region.len());
    let mut empirical = Vec::with_capacity(per_region.len());
    for (rho, c, shots) in per_region {
        regional_truths.push(rho);
        confusions_truth.push(c);
        counts.push(shots.counts);
        empirical.push(shots.empirical);
    }
    let delta_c = deviation_delta_c(&confusions_truth)?;
    Ok(Instance {
        graph: graph.clone(),
        params: params.clone(),
        seeds,
        global_truth,
        regional_truths,
        confusions_truth,
        counts,
        empirical,
        delta_c,
    })
}
