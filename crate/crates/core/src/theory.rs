//! Numerical checks of local identifiability and quadratic growth of the
//! joint state/readout model, and of the likelihood form of the KL
//! discrepancy.
//!
//! Perturbations live in the real space `V = Π_r Herm(Q_r) × Π_r R^{M_r×M_r}`
//! laid out as all regional Hermitian coordinates first, then every
//! confusion matrix in column-major order. Both blocks use isometric
//! coordinates, so Euclidean norms in `V` are the Frobenius distances.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QtdmError, Result};
use crate::instance::{make_global_state, ConfusionMatrix, Instance};
use crate::qmat::{self, partial_trace, partial_trace_map, tensor_povm, DensityMatrix, Povm};
use crate::regions::RegionGraph;

/// Largest `dim V · dim T` handled by the dense tangent machinery.
pub const MAX_BASIS_ENTRIES: usize = 25_000_000;

/// Relative singular-value threshold separating the numerical kernel.
pub const KERNEL_RTOL: f64 = 1e-8;

/// How confusion perturbations are parameterized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// Every zero-column-sum `ΔC_r`.
    FullConfusion,
    /// `ΔC_r = Σ_i c_1 ⊗ … ⊗ Δc_i ⊗ … ⊗ c_n` over the qubits of region `r`.
    TensorConfusion,
}

/// An interior reference pair together with the measurement model.
#[derive(Clone, Debug)]
pub struct TheoryFixture {
    pub graph: RegionGraph,
    /// Born maps on Hermitian coordinates, one per region.
    pub born: Vec<DMatrix<f64>>,
    pub rhos: Vec<DensityMatrix>,
    pub confusions: Vec<ConfusionMatrix>,
    /// Per-region, per-qubit 4×4 confusion factors when `C_r` is a tensor
    /// product.
    pub factors: Option<Vec<Vec<DMatrix<f64>>>>,
}

fn random_factor(rng: &mut ChaCha8Rng, spread: f64) -> DMatrix<f64> {
    let mut r = DMatrix::from_fn(4, 4, |_, _| 0.1 + rng.random::<f64>());
    for mut col in r.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    DMatrix::identity(4, 4) * (1.0 - spread) + r * spread
}

fn kron_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

impl TheoryFixture {
    /// Mixed global state (weight `nu` on `I/Q`) reduced to the regions, with
    /// tensor-product confusion matrices whose per-qubit factors have strictly
    /// positive entries.
    pub fn interior(graph: RegionGraph, nu: f64, seed: u64) -> Result<Self> {
        graph.validate().into_result()?;
        if !(nu > 0.0 && nu < 1.0) {
            return invalid(format!("nu must lie in (0, 1) for an interior reference, got {nu}"));
        }
        let global = make_global_state(graph.n_sites, nu, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0f);
        let mut born = Vec::new();
        let mut rhos = Vec::new();
        let mut confusions = Vec::new();
        let mut factors = Vec::new();
        for region in &graph.regions {
            rhos.push(partial_trace(&global, region)?);
            born.push(tensor_povm(region.len())?.born_matrix());
            let fs: Vec<DMatrix<f64>> = region.iter().map(|_| random_factor(&mut rng, 0.15)).collect();
            let c = fs[1..].iter().fold(fs[0].clone(), |acc, f| kron_real(&acc, f));
            confusions.push(ConfusionMatrix::new(c)?);
            factors.push(fs);
        }
        Ok(Self { graph, born, rhos, confusions, factors: Some(factors) })
    }

    /// Uses the instance's ground truth as the reference pair. Only the full
    /// parameterization is available since the confusions carry no factors.
    pub fn from_instance(instance: &Instance) -> Result<Self> {
        let mut born = Vec::new();
        for r in 0..instance.n_regions() {
            born.push(instance.povm(r)?.born_matrix());
        }
        Ok(Self {
            graph: instance.graph.clone(),
            born,
            rhos: instance.regional_truths.clone(),
            confusions: instance.confusions_truth.clone(),
            factors: None,
        })
    }

    pub fn n_regions(&self) -> usize {
        self.graph.n_regions()
    }

    fn state_offsets(&self) -> Vec<usize> {
        offsets(self.rhos.iter().map(|r| r.dim() * r.dim()))
    }

    fn confusion_offsets(&self) -> Vec<usize> {
        let base = *self.state_offsets().last().unwrap();
        offsets(self.confusions.iter().map(|c| c.n_outcomes() * c.n_outcomes())).into_iter().map(|o| o + base).collect()
    }

    /// `dim V`.
    pub fn ambient_dim(&self) -> usize {
        *self.confusion_offsets().last().unwrap()
    }

    pub fn n_observations(&self) -> usize {
        self.born.iter().map(|b| b.nrows()).sum()
    }

    fn ideal(&self, r: usize) -> DVector<f64> {
        &self.born[r] * qmat::to_coords(self.rhos[r].matrix())
    }

    /// Stacked `C_r π_r(ρ_r)` at the point `ref + v` for `v ∈ V`.
    pub fn prediction_at(&self, v: &DVector<f64>) -> DVector<f64> {
        let so = self.state_offsets();
        let co = self.confusion_offsets();
        let mut out = Vec::with_capacity(self.n_observations());
        for r in 0..self.n_regions() {
            let m = self.confusions[r].n_outcomes();
            let x = qmat::to_coords(self.rhos[r].matrix()) + v.rows(so[r], so[r + 1] - so[r]);
            let c = self.confusions[r].matrix() + DMatrix::from_column_slice(m, m, &v.as_slice()[co[r]..co[r + 1]]);
            out.extend((c * (&self.born[r] * x)).iter().copied());
        }
        DVector::from_vec(out)
    }

    /// `A⋆ v` for `v ∈ V`.
    pub fn linearization(&self, v: &DVector<f64>) -> DVector<f64> {
        let so = self.state_offsets();
        let co = self.confusion_offsets();
        let mut out = Vec::with_capacity(self.n_observations());
        for r in 0..self.n_regions() {
            let m = self.confusions[r].n_outcomes();
            let dx = v.rows(so[r], so[r + 1] - so[r]);
            let dc = DMatrix::from_column_slice(m, m, &v.as_slice()[co[r]..co[r + 1]]);
            let y = dc * self.ideal(r) + self.confusions[r].matrix() * (&self.born[r] * dx);
            out.extend(y.iter().copied());
        }
        DVector::from_vec(out)
    }

    /// Linear constraints defining the tangent set, one row each: zero trace
    /// per region, overlap consistency of reductions, zero column sums.
    pub fn constraint_matrix(&self) -> Result<DMatrix<f64>> {
        let so = self.state_offsets();
        let co = self.confusion_offsets();
        let n = self.ambient_dim();
        let mut rows: Vec<DVector<f64>> = Vec::new();
        for (r, rho) in self.rhos.iter().enumerate() {
            let mut row = DVector::zeros(n);
            row.rows_mut(so[r], so[r + 1] - so[r]).copy_from(&qmat::trace_functional(rho.dim()));
            rows.push(row);
        }
        for o in &self.graph.overlaps {
            let pa = partial_trace_map(&self.graph.regions[o.a], &o.shared)?;
            let pb = partial_trace_map(&self.graph.regions[o.b], &o.shared)?;
            for i in 0..pa.nrows() {
                let mut row = DVector::zeros(n);
                row.rows_mut(so[o.a], pa.ncols()).copy_from(&pa.row(i).transpose());
                let mut seg = row.rows_mut(so[o.b], pb.ncols());
                seg -= pb.row(i).transpose();
                rows.push(row);
            }
        }
        for (r, c) in self.confusions.iter().enumerate() {
            let m = c.n_outcomes();
            for j in 0..m {
                let mut row = DVector::zeros(n);
                row.rows_mut(co[r] + j * m, m).fill(1.0);
                rows.push(row);
            }
        }
        Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
    }
}

fn offsets(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out = vec![0];
    for s in sizes {
        out.push(out.last().unwrap() + s);
    }
    out
}

/// Orthonormal basis of `{x ∈ R^m : Σ x = 0}`, as columns.
fn helmert(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m - 1, |i, k| {
        let k1 = k + 1;
        let norm = ((k1 * (k1 + 1)) as f64).sqrt();
        match i.cmp(&k1) {
            std::cmp::Ordering::Less => 1.0 / norm,
            std::cmp::Ordering::Equal => -(k1 as f64) / norm,
            std::cmp::Ordering::Greater => 0.0,
        }
    })
}

/// Orthonormal basis of the null space of `a` by eigendecomposition of `aᵀa`.
fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = a.tr_mul(a);
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * top).collect();
    DMatrix::from_fn(a.ncols(), keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
}

/// Orthonormal columns spanning the column space of `a` (full column rank
/// expected), by thin QR.
fn orthonormalize(a: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = a.ncols();
    let qr = a.qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..k).any(|i| r[(i, i)].abs() <= 1e-12 * scale) {
        return invalid("tensor confusion perturbations are linearly dependent");
    }
    Ok(qr.q())
}

/// The linearized model at a reference pair: an orthonormal tangent basis
/// and the linearized prediction map restricted to it.
#[derive(Clone, Debug)]
pub struct LinearizedModel {
    pub parameterization: Parameterization,
    /// `dim V × dim T`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// Number of leading basis columns spanning state perturbations.
    pub state_dim: usize,
    pub confusion_dim: usize,
}

impl LinearizedModel {
    pub fn tangent_dim(&self) -> usize {
        self.basis.ncols()
    }
}

fn check_size(ambient: usize, tangent: usize) -> Result<()> {
    if ambient.saturating_mul(tangent) > MAX_BASIS_ENTRIES {
        return Err(QtdmError::ResourceLimit(format!(
            "tangent basis would hold {ambient} x {tangent} entries (limit {MAX_BASIS_ENTRIES})"
        )));
    }
    Ok(())
}

/// Dimension of the state part of the tangent set.
fn state_tangent(fixture: &TheoryFixture) -> Result<DMatrix<f64>> {
    let n_state = *fixture.state_offsets().last().unwrap();
    let full = fixture.constraint_matrix()?;
    let n_rows = fixture.n_regions()
        + fixture.graph.overlaps.iter().map(|o| 1usize << (2 * o.shared.len())).sum::<usize>();
    Ok(null_space(&full.view((0, 0), (n_rows, n_state)).into_owned()))
}

pub fn tangent_basis(fixture: &TheoryFixture, parameterization: Parameterization) -> Result<LinearizedModel> {
    let ambient = fixture.ambient_dim();
    let co = fixture.confusion_offsets();
    let conf_dims: Vec<usize> = match parameterization {
        Parameterization::FullConfusion => fixture.confusions.iter().map(|c| c.n_outcomes() * (c.n_outcomes() - 1)).collect(),
        Parameterization::TensorConfusion => fixture.graph.regions.iter().map(|r| 12 * r.len()).collect(),
    };
    let conf_total: usize = conf_dims.iter().sum();
    let n_state = co[0];
    check_size(ambient, n_state + conf_total)?;

    let state = state_tangent(fixture)?;
    let state_dim = state.ncols();
    let k = state_dim + conf_total;
    let mut basis = DMatrix::zeros(ambient, k);
    basis.view_mut((0, 0), (n_state, state_dim)).copy_from(&state);

    let mut col = state_dim;
    for (r, c) in fixture.confusions.iter().enumerate() {
        let m = c.n_outcomes();
        match parameterization {
            Parameterization::FullConfusion => {
                let h = helmert(m);
                for j in 0..m {
                    for i in 0..m - 1 {
                        basis.view_mut((co[r] + j * m, col), (m, 1)).copy_from(&h.column(i));
                        col += 1;
                    }
                }
            }
            Parameterization::TensorConfusion => {
                let factors = match &fixture.factors {
                    Some(f) => &f[r],
                    None => return invalid("tensor parameterization needs per-qubit confusion factors"),
                };
                let h = helmert(4);
                let mut block = DMatrix::zeros(m * m, 12 * factors.len());
                let mut b = 0;
                for q in 0..factors.len() {
                    for j in 0..4 {
                        for i in 0..3 {
                            let mut delta = DMatrix::zeros(4, 4);
                            delta.column_mut(j).copy_from(&h.column(i));
                            let term = factors
                                .iter()
                                .enumerate()
                                .map(|(p, f)| if p == q { delta.clone() } else { f.clone() })
                                .reduce(|acc, f| kron_real(&acc, &f))
                                .unwrap();
                            block.column_mut(b).copy_from_slice(term.as_slice());
                            b += 1;
                        }
                    }
                }
                let q = orthonormalize(block)?;
                basis.view_mut((co[r], col), (m * m, q.ncols())).copy_from(&q);
                col += q.ncols();
            }
        }
    }
    Ok(LinearizedModel { parameterization, basis, state_dim, confusion_dim: conf_total })
}

/// `A⋆ ∘ B`: one column per tangent direction, `Σ_r M_r` rows.
pub fn linearized_map(fixture: &TheoryFixture, model: &LinearizedModel) -> DMatrix<f64> {
    let rows = fixture.n_observations();
    let mut out = DMatrix::zeros(rows, model.tangent_dim());
    for j in 0..model.tangent_dim() {
        let v = model.basis.column(j).into_owned();
        out.set_column(j, &fixture.linearization(&v));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub parameterization: Parameterization,
    pub tangent_dim: usize,
    pub state_dim: usize,
    pub confusion_dim: usize,
    pub n_observations: usize,
    pub rank: usize,
    pub kernel_dim: usize,
    /// `dim T − Σ_r M_r`, clamped at 0.
    pub kernel_lower_bound: usize,
    pub sigma_max: f64,
    /// Smallest singular value above the kernel threshold.
    pub sigma_min: f64,
    /// `σ_min² / 8`.
    pub growth_constant_estimate: f64,
    /// Largest operator norm of a regional Born map on Hermitian coordinates.
    pub kappa: f64,
    /// Ratio of the smallest kept to the largest dropped singular value
    /// (infinite when nothing is dropped).
    pub spectral_gap: f64,
    pub singular_values: Vec<f64>,
    /// Orthonormal basis (tangent coordinates) of the kernel complement.
    #[serde(skip)]
    pub row_space: DMatrix<f64>,
}

impl IdentifiabilityReport {
    /// A unit tangent-coordinate vector in the numerical kernel, or `None`
    /// when the map is injective.
    pub fn kernel_direction(&self, seed: u64) -> Option<DVector<f64>> {
        if self.kernel_dim == 0 {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DVector::from_fn(self.tangent_dim, |_, _| rng.random::<f64>() - 0.5);
        let v = &w - &self.row_space * (self.row_space.tr_mul(&w));
        Some(v.normalize())
    }

    /// A random unit vector in the kernel complement.
    pub fn complement_direction(&self, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = DVector::from_fn(self.rank, |_, _| rng.random::<f64>() - 0.5);
        (&self.row_space * w).normalize()
    }
}

pub fn identifiability_report(fixture: &TheoryFixture, parameterization: Parameterization) -> Result<(LinearizedModel, IdentifiabilityReport)> {
    let model = tangent_basis(fixture, parameterization)?;
    let map = linearized_map(fixture, &model);
    let report = report_from_map(fixture, &model, map);
    Ok((model, report))
}

fn report_from_map(fixture: &TheoryFixture, model: &LinearizedModel, map: DMatrix<f64>) -> IdentifiabilityReport {
    let k = model.tangent_dim();
    // work with the tall orientation so that V spans the tangent coordinates
    let svd = SVD::new(map.transpose(), true, false);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    let threshold = KERNEL_RTOL * sigma_max;
    let rank = sv.iter().filter(|&&s| s > threshold).count();
    let sigma_min = if rank > 0 { sv[rank - 1] } else { 0.0 };
    let dropped = if rank < sv.len() { sv[rank] } else { 0.0 };
    let spectral_gap = if dropped > 0.0 { sigma_min / dropped } else { f64::INFINITY };
    let u = svd.u.as_ref().expect("requested");
    let row_space = DMatrix::from_fn(k, rank, |i, j| u[(i, order[j])]);
    let kappa = fixture
        .born
        .iter()
        .map(|b| SVD::new(b.clone(), false, false).singular_values.max())
        .fold(0.0, f64::max);
    IdentifiabilityReport {
        parameterization: model.parameterization,
        tangent_dim: k,
        state_dim: model.state_dim,
        confusion_dim: model.confusion_dim,
        n_observations: fixture.n_observations(),
        rank,
        kernel_dim: k - rank,
        kernel_lower_bound: k.saturating_sub(fixture.n_observations()),
        sigma_max,
        sigma_min,
        growth_constant_estimate: sigma_min * sigma_min / 8.0,
        kappa,
        spectral_gap,
        singular_values: sv,
        row_space,
    }
}

/// `‖[C★+tΔC]π(ρ★+tΔρ) − C★π(ρ★) − t(A∘B)v‖` for the tangent direction `v`.
pub fn linearization_remainder(fixture: &TheoryFixture, model: &LinearizedModel, v: &DVector<f64>, t: f64) -> f64 {
    let dv = &model.basis * v;
    let base = fixture.prediction_at(&DVector::zeros(dv.len()));
    let moved = fixture.prediction_at(&(&dv * t));
    (moved - base - fixture.linearization(&dv) * t).norm()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub t: f64,
    pub feasible: bool,
    pub d_sq: f64,
    pub q_star: f64,
    pub ratio: f64,
    /// `½ (σ_min − κ d/2)²`, the lower envelope implied by the remainder bound.
    pub lower_envelope: f64,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProbe {
    pub rows: Vec<GrowthRow>,
    /// `‖(A∘B)v‖² / 2`, the small-t limit of the ratio.
    pub linear_limit: f64,
    /// False when `v` lies in the numerical kernel.
    pub quadratic_growth: bool,
}

/// Evaluates `Q⋆ / d⋆²` along `ref + t·Bv` for each `t`.
pub fn quadratic_growth_probe(
    fixture: &TheoryFixture,
    model: &LinearizedModel,
    report: &IdentifiabilityReport,
    v: &DVector<f64>,
    ts: &[f64],
) -> Result<GrowthProbe> {
    if v.len() != model.tangent_dim() {
        return invalid("direction does not match the tangent dimension");
    }
    if (v.norm() - 1.0).abs() > 1e-10 {
        return invalid("direction must have unit norm");
    }
    let dv = &model.basis * v;
    let so = fixture.state_offsets();
    let co = fixture.confusion_offsets();
    let base = fixture.prediction_at(&DVector::zeros(dv.len()));
    let lin = fixture.linearization(&dv);
    let linear_limit = 0.5 * lin.norm_squared();
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let step = &dv * t;
        let mut note = None;
        for r in 0..fixture.n_regions() {
            let dim = fixture.rhos[r].dim();
            let x = qmat::to_coords(fixture.rhos[r].matrix()) + step.rows(so[r], so[r + 1] - so[r]);
            if qmat::min_eigenvalue(&qmat::from_coords(x.as_slice(), dim)) < 0.0 {
                note = Some(format!("region {r}: perturbed state leaves the PSD cone"));
                break;
            }
            let m = fixture.confusions[r].n_outcomes();
            let c = fixture.confusions[r].matrix() + DMatrix::from_column_slice(m, m, &step.as_slice()[co[r]..co[r + 1]]);
            if c.iter().any(|x| !(0.0..=1.0).contains(x)) {
                note = Some(format!("region {r}: perturbed confusion leaves [0, 1]"));
                break;
            }
        }
        if let Some(note) = note {
            rows.push(GrowthRow { t, feasible: false, d_sq: f64::NAN, q_star: f64::NAN, ratio: f64::NAN, lower_envelope: f64::NAN, note: Some(note) });
            continue;
        }
        let d_sq = step.norm_squared();
        let q_star = 0.5 * (fixture.prediction_at(&step) - &base).norm_squared();
        let d = d_sq.sqrt();
        let env = (report.sigma_min - 0.5 * report.kappa * d).max(0.0);
        rows.push(GrowthRow { t, feasible: true, d_sq, q_star, ratio: q_star / d_sq, lower_envelope: 0.5 * env * env, note: None });
    }
    let threshold = KERNEL_RTOL * report.sigma_max;
    Ok(GrowthProbe { rows, linear_limit, quadratic_growth: lin.norm() > threshold })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlIdentity {
    pub nll: f64,
    pub kl_form: f64,
    pub abs_discrepancy: f64,
    pub rel_discrepancy: f64,
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Compares `−Σ_m n_m log q_m` with `T·KL(π̂‖q) − T·Σ π̂ log π̂`, where
/// `q = C π(ρ)` and `π̂ = n / T`.
pub fn kl_mle_identity_check(counts: &[u64], rho: &DensityMatrix, povm: &Povm, confusion: &ConfusionMatrix, t_shots: u64) -> Result<KlIdentity> {
    let total: u64 = counts.iter().sum();
    if total != t_shots || t_shots == 0 {
        return invalid(format!("counts sum to {total} but {t_shots} shots were declared"));
    }
    let ideal = qmat::born(rho, povm)?;
    if confusion.n_outcomes() != ideal.len() || counts.len() != ideal.len() {
        return invalid("counts, POVM and confusion matrix disagree on the outcome count");
    }
    let q = confusion.apply(ideal.as_slice());
    let t = t_shots as f64;
    let mut nll = 0.0;
    let mut kl = 0.0;
    let mut entropy_term = 0.0;
    for (m, (&n, &qm)) in counts.iter().zip(&q).enumerate() {
        if n > 0 && qm <= 0.0 {
            return Err(QtdmError::UndefinedLikelihood(format!("outcome {m} has {n} counts but predicted probability {qm}")));
        }
        let p = n as f64 / t;
        if n > 0 {
            nll -= n as f64 * qm.ln();
            kl += p * (p / qm).ln();
        }
        entropy_term += xlogy(p, p);
    }
    let kl_form = t * kl - t * entropy_term;
    let abs = (nll - kl_form).abs();
    Ok(KlIdentity { nll, kl_form, abs_discrepancy: abs, rel_discrepancy: abs / nll.abs().max(f64::MIN_POSITIVE) })
}

/// Rank–nullity lower bound on the full-confusion kernel that needs no
/// basis: `Σ_r M_r(M_r − 1) − Σ_r M_r`, ignoring the (nonnegative) state
/// block. Positive for every geometry with `M_r ≥ 3`.
pub fn full_confusion_kernel_lower_bound(graph: &RegionGraph, m_r: &[u64]) -> Result<u128> {
    if m_r.len() != graph.n_regions() || m_r.iter().any(|&m| m < 2) {
        return invalid("need one outcome count of at least 2 per region");
    }
    let tangent: u128 = m_r.iter().map(|&m| m as u128 * (m as u128 - 1)).sum();
    let rows: u128 = m_r.iter().map(|&m| m as u128).sum();
    Ok(tangent.saturating_sub(rows))
}

/// Small interior fixtures on two-qubit regions.
pub fn standard_fixtures(seed: u64) -> Result<Vec<(String, TheoryFixture)>> {
    let specs: Vec<(&str, usize, Vec<Vec<usize>>)> = vec![
        ("single", 1, vec![vec![0]]),
        ("chain", 3, vec![vec![0, 1], vec![1, 2]]),
        ("ring", 4, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3]]),
        ("hub", 4, vec![vec![0, 1], vec![0, 2], vec![0, 3]]),
    ];
    specs
        .into_iter()
        .enumerate()
        .map(|(i, (name, n, regions))| {
            let graph = RegionGraph::from_regions(n, regions)?;
            Ok((name.to_string(), TheoryFixture::interior(graph, 0.3, seed + i as u64)?))
        })
        .collect()
}
