//! Single experiment runs: instance, estimators, metrics and the output
//! bundle.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use qtdm::instance::{build_instance, calibrate_eps, Instance, InstanceParams, SeedLedger};
use qtdm::metrics::{
    budgets, confusion_error, oracle_gap, optimality_gap, recovery_gain, state_error, MetricReport,
};
use qtdm::regions::{build_geometry, RegionGraph};
use qtdm::solver::{
    initial_state, inner_admm, run_problem, EstimateResult, InnerOutcome, Mode, ProblemData, RegionQuadratic,
    SolverConfig, TraceRow,
};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Outcome of one estimator on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    pub metrics: MetricReport,
    pub outer_steps: usize,
    pub outer_converged: bool,
}

/// All requested estimators on one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub master_seed: u64,
    pub eps: f64,
    pub delta_c: f64,
    pub shots_per_region: u64,
    pub modes: BTreeMap<Mode, ModeOutcome>,
    pub g_rho: Option<f64>,
    pub gamma_rho: Option<f64>,
}

impl SeedOutcome {
    pub fn e_rho(&self, mode: Mode) -> Option<f64> {
        self.modes.get(&mode).map(|m| m.metrics.e_rho)
    }
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub artifact: String,
    pub geometry: qtdm::regions::GeometryKind,
    pub n_sites: usize,
    pub n_regions: usize,
    pub overlap_qubits: usize,
    pub seeds: Vec<SeedOutcome>,
}

/// `eps` from the config, calibrated from `delta_target`, or 0.
pub fn resolve_eps(config: &ExperimentConfig, graph: &RegionGraph) -> Result<f64, CliError> {
    if let Some(e) = config.eps {
        return Ok(e);
    }
    match config.delta_target {
        Some(d) => {
            let m = 1usize << (2 * graph.regions.iter().map(Vec::len).max().unwrap_or(1));
            Ok(calibrate_eps(m, d, config.calibration_seeds, config.calibration_seed)?)
        }
        None => Ok(0.0),
    }
}

pub fn shots_per_region(config: &ExperimentConfig, graph: &RegionGraph) -> Result<u64, CliError> {
    match config.total_shots {
        Some(t) => {
            let per = t / graph.n_regions() as u64;
            if per == 0 {
                return Err(CliError::Config(format!("total_shots = {t} leaves no shots for {} regions", graph.n_regions())));
            }
            Ok(per)
        }
        None => Ok(config.shots_per_region),
    }
}

/// Seed `i` of a run uses `master_seed + i`.
pub fn seed_for(config: &ExperimentConfig, i: usize) -> u64 {
    config.master_seed.wrapping_add(i as u64)
}

fn starting_confusions(mode: Mode, instance: &Instance) -> Vec<DMatrix<f64>> {
    match mode {
        Mode::Oracle => instance.confusions_truth.iter().map(|c| c.matrix().clone()).collect(),
        _ => instance.empirical.iter().map(|p| DMatrix::identity(p.len(), p.len())).collect(),
    }
}

/// Runs the first inner ADMM loop from the estimator's starting point with
/// the given iteration cap and a tolerance below reach, so that its final
/// objective serves as `J_min`.
pub fn inner_reference(
    problem: &ProblemData,
    confusions: Vec<DMatrix<f64>>,
    config: &SolverConfig,
    iterations: usize,
) -> Result<InnerOutcome, CliError> {
    let mut cfg = config.clone();
    cfg.inner_max = iterations;
    cfg.inner_tol = f64::MIN_POSITIVE;
    let quads = confusions
        .iter()
        .enumerate()
        .map(|(r, c)| RegionQuadratic::new(&problem.regions[r], c, cfg.gamma_rho, cfg.beta))
        .collect::<qtdm::Result<Vec<_>>>()?;
    let mut state = initial_state(problem, confusions);
    Ok(inner_admm(&mut state, problem, &quads, &cfg)?)
}

/// `g_opt` for every inner iteration of the first outer step.
pub fn first_step_gaps(trace: &[TraceRow], j_min: f64) -> Vec<f64> {
    trace.iter().filter(|r| r.k == 0).map(|r| optimality_gap(r.objective, j_min)).collect()
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "l", "r_cons", "objective", "wall_ns"])?;
    for row in trace {
        w.write_record([
            row.k.to_string(),
            row.l.to_string(),
            format!("{:e}", row.r_cons),
            format!("{:e}", row.objective),
            row.wall_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Builds the instance for one seed and runs every requested mode.
pub fn run_seed(
    config: &ExperimentConfig,
    graph: &RegionGraph,
    eps: f64,
    t_r: u64,
    seed: u64,
    out: Option<&Path>,
) -> Result<(Instance, SeedOutcome), CliError> {
    let params = InstanceParams { nu: config.nu, eps, shots_per_region: t_r, master_seed: seed };
    let instance = build_instance(graph, &params)?;
    let problem = ProblemData::from_instance(&instance)?;
    let m_r: Vec<u64> = instance.empirical.iter().map(|p| p.len() as u64).collect();
    let mut modes = BTreeMap::new();
    for &mode in &config.modes {
        let mut solver = config.solver.clone();
        solver.mode = mode;
        let result: EstimateResult =
            run_problem(&problem, Some(&instance.confusions_truth), Some(&instance.regional_truths), &solver)?;
        let reference = inner_reference(&problem, starting_confusions(mode, &instance), &solver, config.reference_iterations)?;
        let j_min = reference.rows.last().map(|r| r.objective).unwrap_or(f64::NAN);
        let metrics = MetricReport {
            e_rho: state_error(&result.rhos, &instance.regional_truths)?,
            e_c: confusion_error(&result.confusions, &instance.confusions_truth)?,
            g_rho: None,
            gamma_rho_gap: None,
            r_cons: result.trace.iter().map(|r| r.r_cons).collect(),
            g_opt: first_step_gaps(&result.trace, j_min),
            budgets: budgets(graph, &m_r, result.l_bar())?,
            l_bar: result.l_bar(),
        };
        if let Some(dir) = out {
            let dir = dir.join(mode.name());
            result.save(&dir)?;
            write_trace(&dir.join("trace.csv"), &result.trace)?;
        }
        modes.insert(mode, ModeOutcome { metrics, outer_steps: result.outer.len(), outer_converged: result.outer_converged });
    }
    let (g_rho, gamma_rho) = gains(&modes);
    if let Some(joint) = modes.get_mut(&Mode::Joint) {
        joint.metrics.g_rho = g_rho;
        joint.metrics.gamma_rho_gap = gamma_rho;
    }
    let delta_c = instance.delta_c;
    Ok((instance, SeedOutcome { master_seed: seed, eps, delta_c, shots_per_region: t_r, modes, g_rho, gamma_rho }))
}

fn gains(modes: &BTreeMap<Mode, ModeOutcome>) -> (Option<f64>, Option<f64>) {
    let e = |m: Mode| modes.get(&m).map(|o| o.metrics.e_rho);
    let g = match (e(Mode::Ideal), e(Mode::Joint)) {
        (Some(i), Some(j)) => recovery_gain(i, j).ok(),
        _ => None,
    };
    let gamma = match (e(Mode::Ideal), e(Mode::Joint), e(Mode::Oracle)) {
        (Some(i), Some(j), Some(o)) => oracle_gap(i, j, o).ok(),
        _ => None,
    };
    (g, gamma)
}

#[derive(Clone, Debug, Serialize)]
struct Defaults {
    site_qubits: usize,
    region_qubits: usize,
    overlap_qubits: usize,
    outcomes_per_region: String,
    shots_per_region: u64,
    total_shots: &'static str,
    discrepancy: &'static str,
    readout_regularizer: &'static str,
    beta: f64,
    gamma_rho: f64,
    gamma_c: f64,
    lambda: f64,
    global_state: &'static str,
    confusion: &'static str,
    geometries: Vec<&'static str>,
    estimators: Vec<&'static str>,
    measures: Vec<&'static str>,
}

fn defaults() -> Defaults {
    let s = SolverConfig::default();
    Defaults {
        site_qubits: 1,
        region_qubits: 4,
        overlap_qubits: 2,
        outcomes_per_region: "Q_r^2 = 4^q_r = 256".into(),
        shots_per_region: ExperimentConfig::default().shots_per_region,
        total_shots: "sum_r T_r",
        discrepancy: "0.5 * ||a - b||_2^2",
        readout_regularizer: "||C_r - I||_F^2",
        beta: s.beta,
        gamma_rho: s.gamma_rho,
        gamma_c: s.gamma_c,
        lambda: s.lambda,
        global_state: "(1 - nu) U|0><0|U^dagger + (nu / Q) I",
        confusion: "perturb I_r, project columns onto the simplex",
        geometries: vec!["ring", "ladder", "torus", "hub"],
        estimators: vec!["ideal", "joint", "oracle"],
        measures: vec!["e_rho", "e_c"],
    }
}

#[derive(Serialize)]
struct SeedEntry {
    index: usize,
    eps: f64,
    delta_c: f64,
    ledger: SeedLedger,
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    seeds: Vec<(usize, f64, f64, SeedLedger)>,
) -> Result<(), CliError> {
    let seeds: Vec<SeedEntry> =
        seeds.into_iter().map(|(index, eps, delta_c, ledger)| SeedEntry { index, eps, delta_c, ledger }).collect();
    let manifest = serde_json::json!({
        "artifact": qtdm::VERSION,
        "command": command,
        "config": config,
        "defaults": defaults(),
        "seeds": seeds,
    });
    write_json(&dir.join("manifest.json"), &manifest)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(value)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn cmd_run(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let graph = build_geometry(config.geometry);
    let eps = resolve_eps(config, &graph)?;
    let t_r = shots_per_region(config, &graph)?;
    let out = &config.out;
    fs::create_dir_all(out)?;
    let mut seeds = Vec::with_capacity(config.seeds);
    let mut ledgers = Vec::with_capacity(config.seeds);
    for i in 0..config.seeds {
        let seed = seed_for(config, i);
        let dir = out.join(format!("seed_{seed}"));
        let (instance, outcome) = run_seed(config, &graph, eps, t_r, seed, Some(&dir))?;
        ledgers.push((i, eps, instance.delta_c, instance.seeds.clone()));
        seeds.push(outcome);
    }
    write_manifest(out, "run", config, ledgers)?;
    let report = RunReport {
        artifact: qtdm::VERSION.to_string(),
        geometry: config.geometry,
        n_sites: graph.n_sites,
        n_regions: graph.n_regions(),
        overlap_qubits: graph.overlaps.iter().map(|o| o.shared.len()).max().unwrap_or(0),
        seeds,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
