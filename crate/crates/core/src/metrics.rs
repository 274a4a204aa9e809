//! Error metrics, gains, communication and work budgets, and the exact
//! parameter/communication scaling bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QtdmError, Result};
use crate::instance::ConfusionMatrix;
use crate::qmat::DensityMatrix;
use crate::regions::RegionGraph;
use crate::solver::{ProblemData, SolverState};

fn mean_relative<T>(est: &[T], truth: &[T], diff: impl Fn(&T, &T) -> f64, norm: impl Fn(&T) -> f64) -> Result<f64> {
    if est.len() != truth.len() || est.is_empty() {
        return invalid(format!("{} estimates for {} truths", est.len(), truth.len()));
    }
    let mut total = 0.0;
    for (e, t) in est.iter().zip(truth) {
        let n = norm(t);
        if n == 0.0 {
            return invalid("reference has zero norm");
        }
        total += diff(e, t) / n;
    }
    Ok(total / est.len() as f64)
}

/// `(1/R) Σ_r ‖ρ̂_r − ρ_r★‖_F / ‖ρ_r★‖_F`.
pub fn state_error(estimates: &[DensityMatrix], truths: &[DensityMatrix]) -> Result<f64> {
    if estimates.iter().zip(truths).any(|(e, t)| e.sites() != t.sites()) {
        return invalid("estimate and truth live on different sites");
    }
    mean_relative(estimates, truths, |e, t| e.distance(t), |t| t.matrix().norm())
}

/// `(1/R) Σ_r ‖Ĉ_r − C_r★‖_F / ‖C_r★‖_F`.
pub fn confusion_error(estimates: &[ConfusionMatrix], truths: &[ConfusionMatrix]) -> Result<f64> {
    if estimates.iter().zip(truths).any(|(e, t)| e.n_outcomes() != t.n_outcomes()) {
        return invalid("estimate and truth have different outcome counts");
    }
    mean_relative(estimates, truths, |e, t| (e.matrix() - t.matrix()).norm(), |t| t.matrix().norm())
}

/// `sqrt(Σ_pairs ‖ρ_r[r'] − ρ_{rr'}‖² + ‖ρ_{r'}[r] − ρ_{rr'}‖²)`.
pub fn consensus_residual(state: &SolverState, problem: &ProblemData) -> f64 {
    let mut total = 0.0;
    for (r, region) in problem.regions.iter().enumerate() {
        for link in &region.links {
            let z = &state.consensus[link.overlap];
            total += (&*link.map * &state.rhos[r] - z).norm_squared();
        }
    }
    total.sqrt()
}

/// `(J − J_min)/max(1, |J_min|)`, reported as 0 when within 1e-12.
pub fn optimality_gap(objective: f64, reference: f64) -> f64 {
    let diff = objective - reference;
    if diff.abs() <= 1e-12 {
        return 0.0;
    }
    diff / reference.abs().max(1.0)
}

/// Percentage reduction of the state error, `100(e_I − e_J)/e_I`.
pub fn recovery_gain(e_ideal: f64, e_joint: f64) -> Result<f64> {
    if !(e_ideal > 0.0) {
        return Err(QtdmError::UndefinedMetric(format!("recovery gain needs e_I > 0, got {e_ideal}")));
    }
    Ok(100.0 * (e_ideal - e_joint) / e_ideal)
}

/// Fraction of the ideal-to-oracle gap closed, `100(e_I − e_J)/(e_I − e_O)`.
pub fn oracle_gap(e_ideal: f64, e_joint: f64, e_oracle: f64) -> Result<f64> {
    if !(e_ideal > e_oracle) {
        return Err(QtdmError::UndefinedMetric(format!(
            "oracle gap needs e_I > e_O, got e_I = {e_ideal}, e_O = {e_oracle}"
        )));
    }
    Ok(100.0 * (e_ideal - e_joint) / (e_ideal - e_oracle))
}

/// Communication and work budgets together with the parameter counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budgets {
    pub l_bar: f64,
    /// `Σ_{unordered pairs} 4^{q_rr'}`
    pub comm_per_iteration: u128,
    /// `Σ_r 4^{q_r} + Σ_r M_r²`
    pub work_per_iteration: u128,
    pub c_bud: f64,
    pub w_bud: f64,
    pub n_comm: u128,
    pub p_reg: u128,
    pub p_glob: u128,
    pub f_mem: f64,
}

impl Budgets {
    /// `C_bud/W_bud`, taken from the integer counts so that it does not
    /// depend on `l_bar`.
    pub fn comm_work_ratio(&self) -> f64 {
        self.comm_per_iteration as f64 / self.work_per_iteration as f64
    }
}

fn pow4(e: usize) -> Result<u128> {
    if e > 60 {
        return Err(QtdmError::ResourceLimit(format!("4^{e} overflows the budget counters")));
    }
    Ok(1u128 << (2 * e))
}

fn check_outcomes(graph: &RegionGraph, m_r: &[u64]) -> Result<()> {
    if m_r.len() != graph.n_regions() {
        return invalid(format!("{} POVM sizes for {} regions", m_r.len(), graph.n_regions()));
    }
    Ok(())
}

pub fn budgets(graph: &RegionGraph, m_r: &[u64], l_bar: f64) -> Result<Budgets> {
    check_outcomes(graph, m_r)?;
    if !(l_bar >= 0.0 && l_bar.is_finite()) {
        return invalid(format!("l_bar must be nonnegative, got {l_bar}"));
    }
    let mut comm = 0u128;
    for o in &graph.overlaps {
        comm += pow4(o.shared.len())?;
    }
    let mut work = 0u128;
    let mut p_reg = 0u128;
    for (r, &m) in m_r.iter().enumerate() {
        let m = m as u128;
        let s = pow4(graph.region_qubits(r))?;
        work += s + m * m;
        p_reg += (s - 1) + m * m.saturating_sub(1);
    }
    let big_m = pow4(graph.n_sites)?;
    let p_glob = (big_m - 1)
        .checked_add(big_m.checked_mul(big_m - 1).ok_or_else(|| QtdmError::ResourceLimit("global parameter count overflows".into()))?)
        .ok_or_else(|| QtdmError::ResourceLimit("global parameter count overflows".into()))?;
    Ok(Budgets {
        l_bar,
        comm_per_iteration: comm,
        work_per_iteration: work,
        c_bud: l_bar * comm as f64,
        w_bud: l_bar * work as f64,
        n_comm: 2 * comm,
        p_reg,
        p_glob,
        f_mem: p_glob as f64 / p_reg as f64,
    })
}

/// One inequality of the scaling bounds, evaluated exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub holds: bool,
    /// `rhs − lhs` for upper bounds, `lhs − rhs` for lower bounds.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
}

fn rat(x: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn big_pow(base: u32, e: i64) -> BigRational {
    let p = BigRational::from_integer(BigInt::from(base).pow(e.unsigned_abs() as u32));
    if e >= 0 {
        p
    } else {
        p.recip()
    }
}

fn show(x: &BigRational) -> String {
    if x.is_integer() {
        x.to_integer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

fn bound(name: &str, lhs: BigRational, rhs: BigRational, upper: bool) -> BoundCheck {
    let slack = if upper { &rhs - &lhs } else { &lhs - &rhs };
    BoundCheck {
        name: name.to_string(),
        lhs: show(&lhs),
        rhs: show(&rhs),
        holds: !slack.is_negative(),
        slack: slack.to_f64().unwrap_or(f64::NAN),
    }
}

/// Evaluates the five parameter/communication scaling inequalities with
/// exact rational arithmetic, taking the global POVM size `M = 4^q`.
pub fn scaling_bounds_check(graph: &RegionGraph, m_r: &[u64], mu: f64) -> Result<ScalingReport> {
    check_outcomes(graph, m_r)?;
    if !(mu >= 1.0 && mu.is_finite()) {
        return invalid(format!("mu must be at least 1, got {mu}"));
    }
    let mu_r = BigRational::from_float(mu).expect("finite");
    for (r, &m) in m_r.iter().enumerate() {
        let s = rat(pow4(graph.region_qubits(r))?);
        let m = rat(m as u128);
        if m < s || m > &mu_r * &s {
            return invalid(format!(
                "region {r}: POVM size {m} violates 4^q_r <= M_r <= mu 4^q_r with q_r = {}",
                graph.region_qubits(r)
            ));
        }
    }
    let b = budgets(graph, m_r, 0.0)?;
    let n_regions = rat(graph.n_regions() as u128);
    let q = graph.n_sites as i64;
    let q_max = (0..graph.n_regions()).map(|r| graph.region_qubits(r)).max().unwrap_or(0) as i64;
    let q_min = (0..graph.n_regions()).map(|r| graph.region_qubits(r)).min().unwrap_or(0) as i64;
    let q_ov_max = graph.overlaps.iter().map(|o| o.shared.len()).max().unwrap_or(0) as i64;
    let d_max = rat(graph.max_degree() as u128);

    let p_reg = rat(b.p_reg);
    let p_glob = rat(b.p_glob);
    let n_comm = rat(b.n_comm);
    let glob_floor = big_pow(16, q) - big_pow(4, q);
    let reg_ceiling = (BigRational::one() + &mu_r * &mu_r) * &n_regions * big_pow(16, q_max);

    let mut checks = vec![
        bound("p_reg_upper", p_reg.clone(), reg_ceiling.clone(), true),
        bound("p_glob_lower", p_glob.clone(), glob_floor.clone(), false),
    ];
    if p_reg.is_zero() {
        return invalid("regional parameter count is zero");
    }
    checks.push(bound("f_mem_lower", &p_glob / &p_reg, glob_floor / reg_ceiling, false));
    checks.push(bound("n_comm_upper", n_comm.clone(), &d_max * &n_regions * big_pow(4, q_ov_max), true));
    let ratio_rhs = &d_max / (BigRational::one() - big_pow(4, -q_min)) * big_pow(4, q_ov_max - 2 * q_min);
    checks.push(bound("comm_ratio_upper", &n_comm / &p_reg, ratio_rhs, true));
    let passed = checks.iter().all(|c| c.holds);
    Ok(ScalingReport { checks, passed })
}

/// Per-run metrics as emitted in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub e_rho: f64,
    pub e_c: f64,
    pub g_rho: Option<f64>,
    pub gamma_rho_gap: Option<f64>,
    pub r_cons: Vec<f64>,
    pub g_opt: Vec<f64>,
    pub budgets: Budgets,
    pub l_bar: f64,
}
