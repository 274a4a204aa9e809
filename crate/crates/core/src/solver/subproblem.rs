//! The regional state minimization of one inner ADMM iteration.
//!
//! For region `r` with fixed confusion `C`, the objective in coordinates is
//!
//! `f(x) = ½‖π̂ − CBx‖² + (γ_ρ/2)‖x − a‖² + Σ_l [⟨Λ_l, P_l x − z_l⟩ + (β/2)‖P_l x − z_l‖²]`
//!
//! a strongly convex quadratic `½xᵀHx − bᵀx + c` restricted to the density
//! set.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::model::RegionData;
use super::{SolverConfig, StateSubsolver};
use crate::error::{invalid, Result};
use crate::instance::ConfusionMatrix;
use crate::qmat::{self, born, DensityMatrix, Povm, ProbabilityVector};

/// Fixed-`C` quadratic model of one region, rebuilt whenever `C` changes.
#[derive(Clone, Debug)]
pub struct RegionQuadratic {
    dim: usize,
    gamma_rho: f64,
    beta: f64,
    /// `C · B`
    forward: DMatrix<f64>,
    hessian: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    forward_t_empirical: DVector<f64>,
    trace: DVector<f64>,
    /// `H⁻¹ t` and `tᵀH⁻¹t` for the trace-constrained solve.
    hinv_trace: Option<(DVector<f64>, f64)>,
    lipschitz: f64,
    empirical_sq: f64,
}

/// Result of one regional minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsolveOutcome {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// The trace-constrained stationary point was PSD and returned as is.
    pub exact: bool,
    /// False when the projected-gradient loop hit its iteration cap.
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration
/// (relative tolerance 1e-6).
fn power_iteration(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..1000 {
        let w = h * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= 1e-6 * next.abs() {
            return next.max(norm);
        }
        lambda = next;
    }
    lambda
}

impl RegionQuadratic {
    pub fn new(region: &RegionData, confusion: &DMatrix<f64>, gamma_rho: f64, beta: f64) -> Result<Self> {
        if confusion.nrows() != region.n_outcomes() || confusion.ncols() != region.n_outcomes() {
            return invalid("confusion matrix does not match the region's outcome count");
        }
        let forward = confusion * region.born.as_ref();
        let mut hessian = forward.tr_mul(&forward);
        for i in 0..hessian.nrows() {
            hessian[(i, i)] += gamma_rho;
        }
        for link in &region.links {
            hessian += beta * link.map.tr_mul(&link.map);
        }
        let forward_t_empirical = forward.tr_mul(&region.empirical);
        let trace = qmat::trace_functional(region.dim);
        let chol = Cholesky::new(hessian.clone());
        let hinv_trace = chol.as_ref().map(|c| {
            let u = c.solve(&trace);
            let s = trace.dot(&u);
            (u, s)
        });
        // power iteration approaches from below; pad so 1/L stays a safe step
        let lipschitz = power_iteration(&hessian) * 1.01;
        Ok(Self {
            dim: region.dim,
            gamma_rho,
            beta,
            forward,
            hessian,
            chol,
            forward_t_empirical,
            trace,
            hinv_trace,
            lipschitz,
            empirical_sq: region.empirical.norm_squared(),
        })
    }

    pub fn forward(&self) -> &DMatrix<f64> {
        &self.forward
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `b` and `c` of `f(x) = ½xᵀHx − bᵀx + c` for the given anchor, duals
    /// and consensus variables (one per link, in link order).
    fn linear_terms(
        &self,
        region: &RegionData,
        anchor: &DVector<f64>,
        duals: &[&DVector<f64>],
        consensus: &[&DVector<f64>],
    ) -> (DVector<f64>, f64) {
        let mut b = &self.forward_t_empirical + anchor * self.gamma_rho;
        let mut c = 0.5 * self.empirical_sq + 0.5 * self.gamma_rho * anchor.norm_squared();
        for ((link, lam), z) in region.links.iter().zip(duals).zip(consensus) {
            let shift = *z * self.beta - *lam;
            b += link.map.tr_mul(&shift);
            c += 0.5 * self.beta * z.norm_squared() - lam.dot(z);
        }
        (b, c)
    }

    fn quadratic(&self, x: &DVector<f64>, b: &DVector<f64>, c: f64) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) - b.dot(x) + c
    }

    /// The regional augmented-Lagrangian objective, evaluated term by term.
    pub fn objective(
        &self,
        region: &RegionData,
        x: &DVector<f64>,
        anchor: &DVector<f64>,
        duals: &[&DVector<f64>],
        consensus: &[&DVector<f64>],
    ) -> f64 {
        let mut f = self.fit_and_prox(region, x, anchor);
        for ((link, lam), z) in region.links.iter().zip(duals).zip(consensus) {
            let resid = &*link.map * x - *z;
            f += lam.dot(&resid) + 0.5 * self.beta * resid.norm_squared();
        }
        f
    }

    /// `½‖π̂ − CBx‖² + (γ_ρ/2)‖x − a‖²`.
    pub fn fit_and_prox(&self, region: &RegionData, x: &DVector<f64>, anchor: &DVector<f64>) -> f64 {
        0.5 * (&region.empirical - &self.forward * x).norm_squared() + 0.5 * self.gamma_rho * (x - anchor).norm_squared()
    }

    /// Minimizes the regional objective over the density set.
    ///
    /// The returned objective never exceeds the objective at `warm`, which
    /// must itself be feasible.
    pub fn solve(
        &self,
        region: &RegionData,
        anchor: &DVector<f64>,
        duals: &[&DVector<f64>],
        consensus: &[&DVector<f64>],
        warm: &DVector<f64>,
        config: &SolverConfig,
    ) -> Result<SubsolveOutcome> {
        let (b, c) = self.linear_terms(region, anchor, duals, consensus);
        let f_warm = self.quadratic(warm, &b, c);
        let mut start = (warm.clone(), f_warm);

        if config.subsolver == StateSubsolver::Auto {
            if let (Some(chol), Some((hinv_t, t_hinv_t))) = (&self.chol, &self.hinv_trace) {
                let u = chol.solve(&b);
                let nu = (1.0 - self.trace.dot(&u)) / t_hinv_t;
                let mut x = u + hinv_t * nu;
                let h = qmat::from_coords(x.as_slice(), self.dim);
                let lo = SymmetricEigen::new(h).eigenvalues.min();
                if lo >= -1e-12 {
                    if lo < 0.0 {
                        qmat::project_density_coords(&mut x, self.dim)?;
                    }
                    let f = self.quadratic(&x, &b, c);
                    if f <= f_warm {
                        return Ok(SubsolveOutcome { x, objective: f, iterations: 0, exact: true, converged: true });
                    }
                } else {
                    qmat::project_density_coords(&mut x, self.dim)?;
                    let f = self.quadratic(&x, &b, c);
                    if f < f_warm {
                        start = (x, f);
                    }
                }
            }
        }
        self.projected_gradient(&b, c, start, config.subsolver_tol, config.subsolver_max)
    }

    /// Accelerated projected gradient with function-value restart.
    fn projected_gradient(
        &self,
        b: &DVector<f64>,
        c: f64,
        start: (DVector<f64>, f64),
        tol: f64,
        max_iter: usize,
    ) -> Result<SubsolveOutcome> {
        let (mut x, mut f) = start;
        let step = 1.0 / self.lipschitz;
        let momentum_strong = (self.gamma_rho > 0.0).then(|| {
            let (sl, sm) = (self.lipschitz.sqrt(), self.gamma_rho.sqrt());
            (sl - sm) / (sl + sm)
        });
        let mut y = x.clone();
        let mut theta = 1.0f64;
        let mut quiet = 0;
        for it in 1..=max_iter {
            let grad = &self.hessian * &y - b;
            let mut x_new = &y - grad * step;
            qmat::project_density_coords(&mut x_new, self.dim)?;
            let f_new = self.quadratic(&x_new, b, c);
            if f_new > f {
                // restart from the last accepted point; a plain projected
                // gradient step from there cannot increase f
                if y == x {
                    return Ok(SubsolveOutcome { x, objective: f, iterations: it, exact: false, converged: true });
                }
                y = x.clone();
                theta = 1.0;
                continue;
            }
            let m = match momentum_strong {
                Some(m) => m,
                None => {
                    let next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                    let m = (theta - 1.0) / next;
                    theta = next;
                    m
                }
            };
            let change = f - f_new;
            y = &x_new + (&x_new - &x) * m;
            x = x_new;
            f = f_new;
            if change <= tol * f.abs().max(1e-300) {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(SubsolveOutcome { x, objective: f, iterations: it, exact: false, converged: true });
                }
            } else {
                quiet = 0;
            }
        }
        Ok(SubsolveOutcome { x, objective: f, iterations: max_iter, exact: false, converged: false })
    }
}

/// `Σ_r [½‖π̂_r − C_r π_r(ρ_r)‖² + (γ_ρ/2)‖ρ_r − ρ_r^k‖_F²]`.
pub fn state_objective(
    rhos: &[DensityMatrix],
    confusions: &[ConfusionMatrix],
    anchors: &[DensityMatrix],
    gamma_rho: f64,
    empirical: &[ProbabilityVector],
    povms: &[Povm],
) -> Result<f64> {
    let n = rhos.len();
    if confusions.len() != n || anchors.len() != n || empirical.len() != n || povms.len() != n {
        return invalid("state_objective needs one entry per region in every argument");
    }
    let mut total = 0.0;
    for r in 0..n {
        let p = born(&rhos[r], &povms[r])?;
        let c = &confusions[r];
        if c.n_outcomes() != p.len() || empirical[r].len() != p.len() {
            return invalid(format!("region {r}: outcome counts differ"));
        }
        if anchors[r].dim() != rhos[r].dim() {
            return invalid(format!("region {r}: anchor dimension differs"));
        }
        let predicted = c.apply(p.as_slice());
        let fit: f64 = empirical[r].as_slice().iter().zip(&predicted).map(|(a, b)| (a - b) * (a - b)).sum();
        total += 0.5 * fit + 0.5 * gamma_rho * rhos[r].distance(&anchors[r]).powi(2);
    }
    Ok(total)
}
