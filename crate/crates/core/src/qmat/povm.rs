use nalgebra::DMatrix;

use super::{coords, hermitian_eigenvalues, identity, kron, ComplexMatrix, DensityMatrix, ProbabilityVector, C64};
use crate::error::{invalid, QtdmError, Result};

/// Effects beyond this many qubits (4^6 = 4096 outcomes) are refused.
pub const MAX_POVM_QUBITS: usize = 6;

/// An ordered list of PSD effects summing to the identity.
#[derive(Clone, Debug)]
pub struct Povm {
    dim: usize,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return invalid("a POVM needs at least one effect");
        };
        let dim = first.nrows();
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (m, e) in effects.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return invalid(format!("effect {m} has the wrong shape"));
            }
            if hermitian_eigenvalues(e)[0] < -super::PSD_TOL {
                return invalid(format!("effect {m} is not positive semidefinite"));
            }
            total += e;
        }
        let defect = (total - identity(dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if defect > 1e-10 {
            return invalid(format!("effects sum to the identity only within {defect:.3e}"));
        }
        Ok(Self { dim, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    /// Real `M × dim²` matrix with row `m` the Hermitian coordinates of
    /// `E_m`, so `born = B · coords(ρ)`.
    pub fn born_matrix(&self) -> DMatrix<f64> {
        let n = self.dim * self.dim;
        let mut b = DMatrix::zeros(self.effects.len(), n);
        for (m, e) in self.effects.iter().enumerate() {
            b.set_row(m, &coords::to_coords(e).transpose());
        }
        b
    }

    /// Gram matrix `G_{mn} = ⟨E_m, E_n⟩` of the vectorized effects.
    pub fn gram(&self) -> DMatrix<f64> {
        let b = self.born_matrix();
        &b * b.transpose()
    }
}

/// Born probabilities `π_m = Re Tr(E_m ρ)`.
pub fn born(rho: &DensityMatrix, povm: &Povm) -> Result<ProbabilityVector> {
    if rho.dim() != povm.dim {
        return invalid(format!("state dimension {} does not match POVM dimension {}", rho.dim(), povm.dim));
    }
    let r = rho.matrix();
    let probs = povm
        .effects
        .iter()
        .map(|e| {
            // Tr(Eρ) = Σ_ij E_ij ρ_ji
            let mut acc = 0.0;
            for i in 0..povm.dim {
                for j in 0..povm.dim {
                    acc += (e[(i, j)] * r[(j, i)]).re;
                }
            }
            acc
        })
        .collect();
    ProbabilityVector::new(probs)
}

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

/// Tetrahedral SIC POVM `E_m = (I + r_m·σ)/4`.
pub fn sic_qubit_povm() -> Povm {
    let s = INV_SQRT3;
    let bloch = [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let effects = bloch
        .iter()
        .map(|r| {
            let mut e = ComplexMatrix::zeros(2, 2);
            e[(0, 0)] = C64::new((1.0 + r[2]) / 4.0, 0.0);
            e[(1, 1)] = C64::new((1.0 - r[2]) / 4.0, 0.0);
            e[(0, 1)] = C64::new(r[0] / 4.0, -r[1] / 4.0);
            e[(1, 0)] = C64::new(r[0] / 4.0, r[1] / 4.0);
            e
        })
        .collect();
    Povm { dim: 2, effects }
}

/// All `4ⁿ` tensor products of [`sic_qubit_povm`] effects; outcome index in
/// base 4 with the first qubit as most significant digit.
pub fn tensor_povm(n_qubits: usize) -> Result<Povm> {
    if n_qubits == 0 {
        return invalid("need at least one qubit");
    }
    if n_qubits > MAX_POVM_QUBITS {
        return Err(QtdmError::ResourceLimit(format!(
            "{n_qubits}-qubit tensor POVM exceeds the {MAX_POVM_QUBITS}-qubit cap"
        )));
    }
    let single = sic_qubit_povm();
    let mut effects = single.effects.clone();
    for _ in 1..n_qubits {
        effects = effects
            .iter()
            .flat_map(|a| single.effects.iter().map(move |b| kron(a, b)))
            .collect();
    }
    Ok(Povm { dim: 1 << n_qubits, effects })
}
