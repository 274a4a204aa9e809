//! Distributed proximal-alternating ADMM for joint regional state and
//! confusion-matrix estimation.
//!
//! The outer loop alternates a state block, solved by consensus ADMM over
//! the overlap graph with the confusion matrices held fixed, and a confusion
//! block that is separable across regions. All regional quantities are kept
//! in real Hermitian coordinates (see [`crate::qmat::to_coords`]) so that the
//! Born map and the partial traces become real matrices.

mod admm;
mod confusion;
mod estimator;
mod model;
mod subproblem;

pub use admm::{consensus_update, dual_update, inner_admm, InnerOutcome};
pub use confusion::{confusion_objective, confusion_update, ConfusionOutcome};
pub use estimator::{initial_state, run_estimator, run_problem, EstimateResult, OuterRow};
pub use model::{Link, ProblemData, RegionData};
pub use subproblem::{state_objective, RegionQuadratic, SubsolveOutcome};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QtdmError, Result};
use crate::instance::ConfusionMatrix;

/// Which confusion matrices the estimator uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Pins `C_r = I` (readout errors ignored).
    #[serde(alias = "ideal-fixed", alias = "I")]
    Ideal,
    /// Alternates state and confusion estimation.
    #[serde(alias = "J")]
    Joint,
    /// Pins `C_r` to the ground truth.
    #[serde(alias = "oracle-fixed", alias = "O")]
    Oracle,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Ideal, Mode::Joint, Mode::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Ideal => "ideal",
            Mode::Joint => "joint",
            Mode::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = QtdmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ideal" | "i" | "ideal-fixed" => Ok(Mode::Ideal),
            "joint" | "j" => Ok(Mode::Joint),
            "oracle" | "o" | "oracle-fixed" => Ok(Mode::Oracle),
            other => invalid(format!("unknown mode '{other}' (expected ideal, joint or oracle)")),
        }
    }
}

/// How the per-region state minimization is carried out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSubsolver {
    /// Solve the trace-constrained quadratic exactly and accept it when it is
    /// positive semidefinite; otherwise fall back to projected gradient.
    #[default]
    Auto,
    /// Always run accelerated projected gradient.
    ProjectedGradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub beta: f64,
    pub gamma_rho: f64,
    pub gamma_c: f64,
    pub lambda: f64,
    /// `C̄_r`; identity when absent.
    #[serde(skip)]
    pub reference_confusions: Option<Vec<ConfusionMatrix>>,
    /// Inner stop: `r_cons ≤ inner_tol · √(Σ_directed 4^{q_ov})`.
    pub inner_tol: f64,
    pub inner_max: usize,
    /// Outer stop: `max_r ‖Δρ_r‖_F + max_r ‖ΔC_r‖_F < outer_tol`.
    pub outer_tol: f64,
    pub outer_max: usize,
    pub subsolver_tol: f64,
    pub subsolver_max: usize,
    pub subsolver: StateSubsolver,
    pub mode: Mode,
    /// Run the region phase on the worker pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            gamma_rho: 0.1,
            gamma_c: 0.1,
            lambda: 1e-2,
            reference_confusions: None,
            inner_tol: 1e-6,
            inner_max: 200,
            outer_tol: 1e-5,
            outer_max: 50,
            subsolver_tol: 1e-8,
            subsolver_max: 2000,
            subsolver: StateSubsolver::Auto,
            mode: Mode::Joint,
            parallel: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive, got {v}"))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be nonnegative, got {v}"))
            }
        };
        pos("beta", self.beta)?;
        nonneg("gamma_rho", self.gamma_rho)?;
        nonneg("gamma_c", self.gamma_c)?;
        nonneg("lambda", self.lambda)?;
        pos("inner_tol", self.inner_tol)?;
        pos("outer_tol", self.outer_tol)?;
        pos("subsolver_tol", self.subsolver_tol)?;
        if self.inner_max == 0 || self.subsolver_max == 0 {
            return invalid("iteration caps must be at least 1");
        }
        Ok(())
    }
}

/// Iterates of the alternating scheme. Regional states, consensus variables
/// and duals are stored as Hermitian coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub rhos: Vec<DVector<f64>>,
    pub confusions: Vec<DMatrix<f64>>,
    /// `ρ_{rr'}` per overlap, in canonical overlap order.
    pub consensus: Vec<DVector<f64>>,
    /// `(Λ_{rr'}, Λ_{r'r})` per overlap with `r < r'`.
    pub duals: Vec<(DVector<f64>, DVector<f64>)>,
}

/// One inner-iteration record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub l: usize,
    pub r_cons: f64,
    pub objective: f64,
    pub wall_ns: u64,
    /// `max ‖Λ_{rr'} + Λ_{r'r}‖_max` over overlaps.
    pub dual_antisymmetry: f64,
    /// Smallest eigenvalue over all regional iterates.
    pub min_eigenvalue: f64,
    /// Largest `|Tr ρ_r − 1|`.
    pub trace_defect: f64,
    /// Regions whose subsolver hit its iteration cap.
    pub subsolver_warnings: usize,
}
