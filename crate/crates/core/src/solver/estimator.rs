//! Outer proximal alternating loop.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::admm::inner_admm;
use super::confusion::confusion_update;
use super::model::ProblemData;
use super::subproblem::RegionQuadratic;
use super::{Mode, SolverConfig, SolverState, TraceRow};
use crate::error::{invalid, Result};
use crate::instance::{write_array, ArrayFile};
use crate::instance::{ConfusionMatrix, Instance};
use crate::metrics::{confusion_error, state_error};
use crate::qmat::{self, DensityMatrix};

/// One outer-iteration record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterRow {
    /// Index of the iterate produced by this step.
    pub k: usize,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub delta_rho: f64,
    pub delta_c: f64,
    pub e_rho: Option<f64>,
    pub e_c: Option<f64>,
    pub subsolver_warnings: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub mode: Mode,
    pub rhos: Vec<DensityMatrix>,
    pub confusions: Vec<ConfusionMatrix>,
    pub state: SolverState,
    pub trace: Vec<TraceRow>,
    pub outer: Vec<OuterRow>,
    pub outer_converged: bool,
}

impl EstimateResult {
    /// Mean number of inner iterations per outer step (0 when none ran).
    pub fn l_bar(&self) -> f64 {
        if self.outer.is_empty() {
            return 0.0;
        }
        self.outer.iter().map(|o| o.inner_iterations as f64).sum::<f64>() / self.outer.len() as f64
    }

    /// Writes the estimates as array files plus `outer.json`. Timing data is
    /// left out so that repeated runs produce identical bytes.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (r, (rho, c)) in self.rhos.iter().zip(&self.confusions).enumerate() {
            write_array(&dir.join(format!("region_{r:03}_rho.bin")), &ArrayFile::complex_matrix(rho.matrix()))?;
            write_array(&dir.join(format!("region_{r:03}_confusion.bin")), &ArrayFile::real_matrix(c.matrix()))?;
        }
        let summary = serde_json::json!({
            "mode": self.mode,
            "outer_converged": self.outer_converged,
            "l_bar": self.l_bar(),
            "outer": self.outer,
        });
        std::fs::write(dir.join("outer.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        Ok(())
    }
}

fn maximally_mixed_coords(dim: usize) -> DVector<f64> {
    qmat::to_coords(&(qmat::identity(dim) / qmat::C64::from(dim as f64)))
}

/// `ρ_r = I/Q_r`, `ρ_{rr'} = I/Q_{rr'}`, `Λ = 0`.
pub fn initial_state(problem: &ProblemData, confusions: Vec<DMatrix<f64>>) -> SolverState {
    let rhos = problem.regions.iter().map(|r| maximally_mixed_coords(r.dim)).collect();
    let consensus = problem
        .graph
        .overlaps
        .iter()
        .map(|o| maximally_mixed_coords(1usize << o.shared.len()))
        .collect();
    let duals = problem.overlap_coords.iter().map(|&n| (DVector::zeros(n), DVector::zeros(n))).collect();
    SolverState { k: 0, rhos, confusions, consensus, duals }
}

fn to_density(problem: &ProblemData, rhos: &[DVector<f64>]) -> Result<Vec<DensityMatrix>> {
    problem
        .regions
        .iter()
        .zip(rhos)
        .map(|(reg, x)| DensityMatrix::from_parts(reg.sites.clone(), qmat::from_coords(x.as_slice(), reg.dim)))
        .collect()
}

fn to_confusions(cs: &[DMatrix<f64>]) -> Vec<ConfusionMatrix> {
    cs.iter().map(|c| ConfusionMatrix::from_matrix_unchecked(c.clone())).collect()
}

fn build_quads(problem: &ProblemData, confusions: &[DMatrix<f64>], config: &SolverConfig) -> Result<Vec<RegionQuadratic>> {
    let build = |r: usize| RegionQuadratic::new(&problem.regions[r], &confusions[r], config.gamma_rho, config.beta);
    if config.parallel {
        (0..problem.n_regions()).into_par_iter().map(build).collect()
    } else {
        (0..problem.n_regions()).map(build).collect()
    }
}

/// Runs the estimator on a generated instance, reporting per-step errors
/// against its ground truth.
pub fn run_estimator(instance: &Instance, config: &SolverConfig) -> Result<EstimateResult> {
    let problem = ProblemData::from_instance(instance)?;
    run_problem(&problem, Some(&instance.confusions_truth), Some(&instance.regional_truths), config)
}

/// Runs the estimator on explicit problem data. `true_confusions` is
/// required in oracle mode; truths, when given, feed the per-step errors.
pub fn run_problem(
    problem: &ProblemData,
    true_confusions: Option<&[ConfusionMatrix]>,
    true_states: Option<&[DensityMatrix]>,
    config: &SolverConfig,
) -> Result<EstimateResult> {
    config.validate()?;
    let n = problem.n_regions();
    let sizes: Vec<usize> = problem.regions.iter().map(|r| r.n_outcomes()).collect();
    let references: Vec<DMatrix<f64>> = match &config.reference_confusions {
        Some(refs) => {
            if refs.len() != n || refs.iter().zip(&sizes).any(|(c, &m)| c.n_outcomes() != m) {
                return invalid("reference confusions do not match the regions");
            }
            refs.iter().map(|c| c.matrix().clone()).collect()
        }
        None => sizes.iter().map(|&m| DMatrix::identity(m, m)).collect(),
    };
    if let Some(t) = true_confusions {
        if t.len() != n || t.iter().zip(&sizes).any(|(c, &m)| c.n_outcomes() != m) {
            return invalid("true confusions do not match the regions");
        }
    }
    if let Some(t) = true_states {
        if t.len() != n {
            return invalid("true states do not match the regions");
        }
    }
    let start_confusions = match config.mode {
        Mode::Ideal => sizes.iter().map(|&m| DMatrix::identity(m, m)).collect(),
        Mode::Joint => references.clone(),
        Mode::Oracle => match true_confusions {
            Some(t) => t.iter().map(|c| c.matrix().clone()).collect(),
            None => return invalid("oracle mode needs the true confusion matrices"),
        },
    };

    let mut state = initial_state(problem, start_confusions);
    let mut quads = build_quads(problem, &state.confusions, config)?;
    let mut trace = Vec::new();
    let mut outer = Vec::new();
    let mut outer_converged = false;

    for k in 0..config.outer_max {
        state.k = k;
        let prev = state.rhos.clone();
        let inner = inner_admm(&mut state, problem, &quads, config)?;
        trace.extend(inner.rows);
        let mut warnings = inner.subsolver_warnings;

        let mut delta_c = 0.0f64;
        if config.mode == Mode::Joint {
            let update = |r: usize| {
                let region = &problem.regions[r];
                let p = region.born.as_ref() * &state.rhos[r];
                confusion_update(
                    &p,
                    &state.confusions[r],
                    &references[r],
                    &region.empirical,
                    config.lambda,
                    config.gamma_c,
                    config.subsolver_tol,
                    config.subsolver_max,
                )
            };
            let updates: Vec<_> = if config.parallel {
                (0..n).into_par_iter().map(update).collect::<Result<_>>()?
            } else {
                (0..n).map(update).collect::<Result<_>>()?
            };
            for (r, u) in updates.into_iter().enumerate() {
                warnings += usize::from(!u.converged);
                delta_c = delta_c.max((&u.c - &state.confusions[r]).norm());
                state.confusions[r] = u.c;
            }
            quads = build_quads(problem, &state.confusions, config)?;
        }
        let delta_rho = prev.iter().zip(&state.rhos).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        state.k = k + 1;

        let e_rho = match true_states {
            Some(t) => Some(state_error(&to_density(problem, &state.rhos)?, t)?),
            None => None,
        };
        let e_c = match true_confusions {
            Some(t) => Some(confusion_error(&to_confusions(&state.confusions), t)?),
            None => None,
        };
        outer.push(OuterRow {
            k: k + 1,
            inner_iterations: inner.iterations,
            inner_converged: inner.converged,
            delta_rho,
            delta_c,
            e_rho,
            e_c,
            subsolver_warnings: warnings,
        });
        if delta_rho + delta_c < config.outer_tol {
            outer_converged = true;
            break;
        }
    }

    Ok(EstimateResult {
        mode: config.mode,
        rhos: to_density(problem, &state.rhos)?,
        confusions: to_confusions(&state.confusions),
        state,
        trace,
        outer,
        outer_converged,
    })
}
