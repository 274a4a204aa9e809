//! Regional confusion-matrix update of the outer loop.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::qmat::project_simplex_in_place;

/// `½‖π̂ − Cp‖² + λ‖C − C̄‖_F² + (γ_C/2)‖C − C^k‖_F²`.
pub fn confusion_objective(
    c: &DMatrix<f64>,
    p: &DVector<f64>,
    empirical: &DVector<f64>,
    reference: &DMatrix<f64>,
    anchor: &DMatrix<f64>,
    lambda: f64,
    gamma_c: f64,
) -> f64 {
    0.5 * (empirical - c * p).norm_squared() + lambda * (c - reference).norm_squared() + 0.5 * gamma_c * (c - anchor).norm_squared()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionOutcome {
    pub c: DMatrix<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project_columns(c: &mut DMatrix<f64>, scratch: &mut Vec<f64>) {
    for mut col in c.column_iter_mut() {
        project_simplex_in_place(col.as_mut_slice(), scratch);
    }
}

/// Minimizes [`confusion_objective`] over column-stochastic matrices by
/// accelerated projected gradient, warm-started at `anchor` (which must be
/// column-stochastic). `p` is the ideal distribution `π_r(ρ_r)`.
#[allow(clippy::too_many_arguments)]
pub fn confusion_update(
    p: &DVector<f64>,
    anchor: &DMatrix<f64>,
    reference: &DMatrix<f64>,
    empirical: &DVector<f64>,
    lambda: f64,
    gamma_c: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ConfusionOutcome> {
    let m = p.len();
    if empirical.len() != m || anchor.shape() != (m, m) || reference.shape() != (m, m) {
        return invalid("confusion_update operands have mismatched dimensions");
    }
    let objective = |c: &DMatrix<f64>| confusion_objective(c, p, empirical, reference, anchor, lambda, gamma_c);
    let lipschitz = p.norm_squared() + 2.0 * lambda + gamma_c;
    if !(lipschitz > 0.0) {
        return Ok(ConfusionOutcome { c: anchor.clone(), objective: objective(anchor), iterations: 0, converged: true });
    }
    let mu = 2.0 * lambda + gamma_c;
    let momentum_strong = (mu > 0.0).then(|| {
        let (sl, sm) = (lipschitz.sqrt(), mu.sqrt());
        (sl - sm) / (sl + sm)
    });
    let step = 1.0 / lipschitz;
    let mut scratch = Vec::with_capacity(m);

    let mut c = anchor.clone();
    let mut f = objective(&c);
    let mut y = c.clone();
    let mut theta = 1.0f64;
    let mut quiet = 0;
    for it in 1..=max_iter {
        let resid = &y * p - empirical;
        let mut grad = &resid * p.transpose();
        grad += (&y - reference) * (2.0 * lambda);
        grad += (&y - anchor) * gamma_c;
        let mut c_new = &y - grad * step;
        project_columns(&mut c_new, &mut scratch);
        let f_new = objective(&c_new);
        if f_new > f {
            if y == c {
                return Ok(ConfusionOutcome { c, objective: f, iterations: it, converged: true });
            }
            y = c.clone();
            theta = 1.0;
            continue;
        }
        let mom = match momentum_strong {
            Some(mom) => mom,
            None => {
                let next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let mom = (theta - 1.0) / next;
                theta = next;
                mom
            }
        };
        let change = f - f_new;
        y = &c_new + (&c_new - &c) * mom;
        c = c_new;
        f = f_new;
        if change <= tol * f.abs().max(1e-300) {
            quiet += 1;
            if quiet >= 2 {
                return Ok(ConfusionOutcome { c, objective: f, iterations: it, converged: true });
            }
        } else {
            quiet = 0;
        }
    }
    Ok(ConfusionOutcome { c, objective: f, iterations: max_iter, converged: false })
}
