//! Dense complex Hermitian linear algebra for regional states.
//!
//! Basis ordering: for a state over ascending sites `[s_0, s_1, ...]`, the
//! computational basis index has `s_0` as its most significant bit.

mod coords;
mod ops;
mod povm;

pub use coords::{coord_dim, from_coords, to_coords, trace_functional};
pub use ops::{
    haar_state, partial_trace, partial_trace_map, partial_trace_pure, project_density,
    project_simplex, project_simplex_in_place, random_unitary, subset_positions,
};
pub(crate) use ops::project_density_coords;
pub use povm::{born, sic_qubit_povm, tensor_povm, Povm, MAX_POVM_QUBITS};

use nalgebra::{DMatrix, SymmetricEigen};
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use nalgebra::Complex;
pub type C64 = Complex<f64>;

/// Generic dense complex square matrix.
pub type ComplexMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
/// Negative probabilities in `[-CLAMP_WINDOW, 0)` are rounded to zero.
pub const CLAMP_WINDOW: f64 = 1e-12;
pub const PROB_SUM_TOL: f64 = 1e-10;

/// Largest entrywise deviation `max |A - A^†|`.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A^†) / 2`.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn complex_trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().fold(C64::zero(), |acc, &z| acc + z)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(a: &ComplexMatrix) -> f64 {
    hermitian_eigenvalues(a)[0]
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

/// Kronecker product `a ⊗ b` (first factor most significant).
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// A Hermitian, positive semidefinite, unit-trace matrix over a list of sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    sites: Vec<usize>,
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates every density-matrix invariant.
    pub fn new(sites: Vec<usize>, mat: ComplexMatrix) -> Result<Self> {
        let rho = Self::from_parts(sites, mat)?;
        let defect = hermiticity_defect(&rho.mat);
        if defect > HERMITIAN_TOL {
            return invalid(format!("matrix is not Hermitian (defect {defect:.3e})"));
        }
        let tr = complex_trace(&rho.mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return invalid(format!("trace {tr} differs from 1"));
        }
        let lo = min_eigenvalue(&rho.mat);
        if lo < -PSD_TOL {
            return invalid(format!("minimum eigenvalue {lo:.3e} is negative"));
        }
        Ok(rho)
    }

    /// Shape checks only; the caller vouches for the spectral invariants.
    pub(crate) fn from_parts(sites: Vec<usize>, mat: ComplexMatrix) -> Result<Self> {
        if sites.is_empty() {
            return invalid("density matrix needs at least one site");
        }
        if sites.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("sites {sites:?} are not strictly ascending"));
        }
        if sites.len() >= usize::BITS as usize {
            return invalid("too many sites");
        }
        let dim = 1usize << sites.len();
        if mat.nrows() != dim || mat.ncols() != dim {
            return invalid(format!(
                "matrix is {}x{}, expected {dim}x{dim} for {} sites",
                mat.nrows(),
                mat.ncols(),
                sites.len()
            ));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("matrix has non-finite entries");
        }
        Ok(Self { sites, mat })
    }

    pub fn maximally_mixed(sites: Vec<usize>) -> Result<Self> {
        let dim = 1usize << sites.len();
        Self::from_parts(sites, identity(dim) * C64::new(1.0 / dim as f64, 0.0))
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(sites: Vec<usize>, psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return invalid(format!("state vector has squared norm {norm}"));
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::from_parts(sites, &v * v.adjoint())
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        frobenius(&self.mat).powi(2)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    /// `ρ_a ⊗ ρ_b` over the concatenated site lists; `b`'s sites must all
    /// follow `a`'s.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        if let (Some(a), Some(b)) = (self.sites.last(), other.sites.first()) {
            if a >= b {
                return invalid("tensor factors must have increasing, disjoint sites");
            }
        }
        let mut sites = self.sites.clone();
        sites.extend_from_slice(&other.sites);
        Self::from_parts(sites, kron(&self.mat, &other.mat))
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        frobenius(&(&self.mat - &other.mat))
    }
}

/// A length-`M` probability distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(mut entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("empty probability vector");
        }
        for (m, p) in entries.iter_mut().enumerate() {
            if !p.is_finite() {
                return invalid(format!("entry {m} is not finite"));
            }
            if *p < 0.0 {
                if *p < -CLAMP_WINDOW {
                    return invalid(format!("entry {m} = {p:.3e} is negative"));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return invalid(format!("entries sum to {sum}, not 1"));
        }
        Ok(Self(entries))
    }

    pub(crate) fn from_vec_unchecked(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
