//! Inner overlap-consensus ADMM for the state block.

use std::time::Instant;

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;

use super::model::ProblemData;
use super::subproblem::{RegionQuadratic, SubsolveOutcome};
use super::{SolverConfig, SolverState, TraceRow};
use crate::error::{invalid, Result};
use crate::qmat;

/// `½(P_a x_a + P_b x_b + (Λ_ab + Λ_ba)/β)`.
pub fn consensus_update(
    reduced_a: &DVector<f64>,
    reduced_b: &DVector<f64>,
    dual_ab: &DVector<f64>,
    dual_ba: &DVector<f64>,
    beta: f64,
) -> Result<DVector<f64>> {
    if !(beta > 0.0) {
        return invalid(format!("beta must be positive, got {beta}"));
    }
    let n = reduced_a.len();
    if reduced_b.len() != n || dual_ab.len() != n || dual_ba.len() != n {
        return invalid("consensus_update operands live on different subsystems");
    }
    Ok((reduced_a + reduced_b + (dual_ab + dual_ba) / beta) * 0.5)
}

/// `Λ + β(P x − z)`.
pub fn dual_update(dual: &DVector<f64>, reduced: &DVector<f64>, consensus: &DVector<f64>, beta: f64) -> DVector<f64> {
    dual + (reduced - consensus) * beta
}

/// Summary of one call to [`inner_admm`].
#[derive(Clone, Debug, PartialEq)]
pub struct InnerOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub rows: Vec<TraceRow>,
    pub subsolver_warnings: usize,
}

fn region_phase(
    state: &SolverState,
    problem: &ProblemData,
    quads: &[RegionQuadratic],
    anchors: &[DVector<f64>],
    config: &SolverConfig,
) -> Result<Vec<SubsolveOutcome>> {
    let solve = |r: usize| {
        let region = &problem.regions[r];
        let duals: Vec<&DVector<f64>> = region
            .links
            .iter()
            .map(|l| if l.is_a { &state.duals[l.overlap].0 } else { &state.duals[l.overlap].1 })
            .collect();
        let consensus: Vec<&DVector<f64>> = region.links.iter().map(|l| &state.consensus[l.overlap]).collect();
        quads[r].solve(region, &anchors[r], &duals, &consensus, &state.rhos[r], config)
    };
    if config.parallel {
        (0..problem.n_regions()).into_par_iter().map(solve).collect()
    } else {
        (0..problem.n_regions()).map(solve).collect()
    }
}

/// Runs inner iterations from `state` until the consensus residual meets the
/// tolerance or `inner_max` is reached. The anchors of the proximal terms are
/// the regional states on entry; on return `state.rhos` holds the terminal
/// iterates.
pub fn inner_admm(
    state: &mut SolverState,
    problem: &ProblemData,
    quads: &[RegionQuadratic],
    config: &SolverConfig,
) -> Result<InnerOutcome> {
    let n = problem.n_regions();
    if quads.len() != n || state.rhos.len() != n {
        return invalid("inner_admm needs one quadratic model and one state per region");
    }
    if state.consensus.len() != problem.graph.overlaps.len() || state.duals.len() != problem.graph.overlaps.len() {
        return invalid("inner_admm needs one consensus variable and dual pair per overlap");
    }
    let anchors = state.rhos.clone();
    let threshold = config.inner_tol * (problem.directed_consensus_dim() as f64).sqrt();
    let mut rows = Vec::new();
    let mut total_warnings = 0;
    let start = Instant::now();

    for l in 1..=config.inner_max {
        let outcomes = region_phase(state, problem, quads, &anchors, config)?;
        let warnings = outcomes.iter().filter(|o| !o.converged).count();
        total_warnings += warnings;
        state.rhos = outcomes.into_iter().map(|o| o.x).collect();

        let mut r_sq = 0.0;
        let mut antisym = 0.0f64;
        for (o, overlap) in problem.graph.overlaps.iter().enumerate() {
            let link_of = |r: usize| problem.regions[r].links.iter().find(|k| k.overlap == o).unwrap();
            let pa = &*link_of(overlap.a).map * &state.rhos[overlap.a];
            let pb = &*link_of(overlap.b).map * &state.rhos[overlap.b];
            let (lam_a, lam_b) = &state.duals[o];
            let z = consensus_update(&pa, &pb, lam_a, lam_b, config.beta)?;
            let new_a = dual_update(lam_a, &pa, &z, config.beta);
            let new_b = dual_update(lam_b, &pb, &z, config.beta);
            r_sq += (&pa - &z).norm_squared() + (&pb - &z).norm_squared();
            antisym = antisym.max((&new_a + &new_b).amax());
            state.consensus[o] = z;
            state.duals[o] = (new_a, new_b);
        }
        let r_cons = r_sq.sqrt();

        let mut objective = 0.0;
        let mut min_eig = f64::INFINITY;
        let mut trace_defect = 0.0f64;
        for r in 0..n {
            let x = &state.rhos[r];
            let region = &problem.regions[r];
            objective += quads[r].fit_and_prox(region, x, &anchors[r]);
            let h = qmat::from_coords(x.as_slice(), region.dim);
            let tr: f64 = (0..region.dim).map(|i| h[(i, i)].re).sum();
            trace_defect = trace_defect.max((tr - 1.0).abs());
            min_eig = min_eig.min(SymmetricEigen::new(h).eigenvalues.min());
        }
        rows.push(TraceRow {
            k: state.k,
            l,
            r_cons,
            objective,
            wall_ns: start.elapsed().as_nanos() as u64,
            dual_antisymmetry: antisym,
            min_eigenvalue: min_eig,
            trace_defect,
            subsolver_warnings: warnings,
        });
        if r_cons <= threshold {
            return Ok(InnerOutcome { iterations: l, converged: true, rows, subsolver_warnings: total_warnings });
        }
    }
    Ok(InnerOutcome { iterations: config.inner_max, converged: false, rows, subsolver_warnings: total_warnings })
}
