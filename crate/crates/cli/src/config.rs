//! Experiment configuration: JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use clap::Args;
use qtdm::regions::GeometryKind;
use qtdm::solver::{Mode, SolverConfig, StateSubsolver};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_DELTA_GRID: [f64; 5] = [0.0, 0.02, 0.05, 0.08, 0.12];
pub const DEFAULT_SHOTS_GRID: [u64; 4] = [6_000, 20_000, 60_000, 200_000];

/// Everything needed to regenerate an experiment bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryKind,
    pub nu: f64,
    /// Confusion perturbation scale; takes precedence over `delta_target`.
    pub eps: Option<f64>,
    /// Mean `‖C − I‖_F/‖I‖_F` to calibrate `eps` for when `eps` is unset.
    pub delta_target: Option<f64>,
    pub calibration_seeds: usize,
    pub calibration_seed: u64,
    pub shots_per_region: u64,
    /// Split evenly across regions; overrides `shots_per_region`.
    pub total_shots: Option<u64>,
    pub seeds: usize,
    pub master_seed: u64,
    pub modes: Vec<Mode>,
    pub solver: SolverConfig,
    pub out: PathBuf,
    pub delta_grid: Vec<f64>,
    pub shots_grid: Vec<u64>,
    /// Upper bound on grid points × seeds × modes for a sweep.
    pub max_runs: usize,
    /// Reference inner iterations used for the optimality gap.
    pub reference_iterations: usize,
    pub theory_seed: u64,
    /// Replaces every `M_r` in the scaling-bound check.
    pub outcome_count: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            geometry: GeometryKind::Ring,
            nu: 0.1,
            eps: None,
            delta_target: None,
            calibration_seeds: 8,
            calibration_seed: 99,
            shots_per_region: 10_000,
            total_shots: None,
            seeds: 1,
            master_seed: 1,
            modes: Mode::ALL.to_vec(),
            solver: SolverConfig::default(),
            out: PathBuf::from("qtdm-out"),
            delta_grid: DEFAULT_DELTA_GRID.to_vec(),
            shots_grid: DEFAULT_SHOTS_GRID.to_vec(),
            max_runs: 2_000,
            reference_iterations: 2_000,
            theory_seed: 1,
            outcome_count: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.modes.is_empty() {
            return bad("at least one mode is required".into());
        }
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.nu) {
            return bad(format!("nu = {} outside [0, 1)", self.nu));
        }
        if let Some(e) = self.eps {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("eps = {e} must be finite and nonnegative"));
            }
        }
        if let Some(d) = self.delta_target {
            if !(d >= 0.0 && d.is_finite()) {
                return bad(format!("delta_target = {d} must be finite and nonnegative"));
            }
        }
        if self.shots_per_region == 0 || self.total_shots == Some(0) {
            return bad("shot counts must be positive".into());
        }
        if self.calibration_seeds == 0 {
            return bad("calibration_seeds must be at least 1".into());
        }
        if self.reference_iterations == 0 {
            return bad("reference_iterations must be at least 1".into());
        }
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    /// Parses a config file. A run manifest is accepted too: its `config`
    /// entry is used.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value = match value.get("config") {
            Some(inner) if value.get("artifact").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn mode(s: &str) -> Result<Mode, String> {
    s.trim().parse().map_err(|e: qtdm::QtdmError| e.to_string())
}

fn geometry(s: &str) -> Result<GeometryKind, String> {
    s.parse().map_err(|e: qtdm::QtdmError| e.to_string())
}

fn subsolver(s: &str) -> Result<StateSubsolver, String> {
    match s {
        "auto" => Ok(StateSubsolver::Auto),
        "projected-gradient" | "projected_gradient" => Ok(StateSubsolver::ProjectedGradient),
        other => Err(format!("unknown subsolver '{other}' (expected auto or projected-gradient)")),
    }
}

/// Flags mirroring [`ExperimentConfig`]; anything given here wins over the
/// config file.
#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// JSON config file (or a run manifest).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = geometry)]
    pub geometry: Option<GeometryKind>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta_target: Option<f64>,
    #[arg(long)]
    pub calibration_seeds: Option<usize>,
    #[arg(long)]
    pub calibration_seed: Option<u64>,
    #[arg(long)]
    pub shots_per_region: Option<u64>,
    #[arg(long)]
    pub total_shots: Option<u64>,
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, visible_alias = "seed")]
    pub master_seed: Option<u64>,
    /// Comma-separated list of ideal, joint, oracle.
    #[arg(long, visible_alias = "mode", value_delimiter = ',', value_parser = mode)]
    pub modes: Option<Vec<Mode>>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma_rho: Option<f64>,
    #[arg(long)]
    pub gamma_c: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub inner_tol: Option<f64>,
    #[arg(long)]
    pub inner_max: Option<usize>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    pub outer_max: Option<usize>,
    #[arg(long)]
    pub subsolver_tol: Option<f64>,
    #[arg(long)]
    pub subsolver_max: Option<usize>,
    #[arg(long, value_parser = subsolver)]
    pub subsolver: Option<StateSubsolver>,
    /// Run the region phase sequentially.
    #[arg(long)]
    pub sequential: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub shots_grid: Option<Vec<u64>>,
    #[arg(long)]
    pub max_runs: Option<usize>,
    #[arg(long)]
    pub reference_iterations: Option<usize>,
    #[arg(long)]
    pub theory_seed: Option<u64>,
    #[arg(long)]
    pub outcome_count: Option<u64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { $target = v; })*
            };
        }
        set! {
            geometry => c.geometry,
            nu => c.nu,
            calibration_seeds => c.calibration_seeds,
            calibration_seed => c.calibration_seed,
            shots_per_region => c.shots_per_region,
            seeds => c.seeds,
            master_seed => c.master_seed,
            modes => c.modes,
            beta => c.solver.beta,
            gamma_rho => c.solver.gamma_rho,
            gamma_c => c.solver.gamma_c,
            lambda => c.solver.lambda,
            inner_tol => c.solver.inner_tol,
            inner_max => c.solver.inner_max,
            outer_tol => c.solver.outer_tol,
            outer_max => c.solver.outer_max,
            subsolver_tol => c.solver.subsolver_tol,
            subsolver_max => c.solver.subsolver_max,
            subsolver => c.solver.subsolver,
            out => c.out,
            delta_grid => c.delta_grid,
            shots_grid => c.shots_grid,
            max_runs => c.max_runs,
            reference_iterations => c.reference_iterations,
            theory_seed => c.theory_seed,
        }
        if self.eps.is_some() {
            c.eps = self.eps;
        }
        if self.delta_target.is_some() {
            c.delta_target = self.delta_target;
        }
        if self.total_shots.is_some() {
            c.total_shots = self.total_shots;
        }
        if self.outcome_count.is_some() {
            c.outcome_count = self.outcome_count;
        }
        if self.sequential {
            c.solver.parallel = false;
        }
        c.validate()?;
        Ok(c)
    }
}
