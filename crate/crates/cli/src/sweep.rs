//! Grid sweeps over (δ_C★, T_tot) × seeds × modes.

use std::fs;
use std::path::Path;

use qtdm::instance::calibrate_eps;
use qtdm::regions::build_geometry;
use qtdm::solver::Mode;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::run::{run_seed, seed_for, write_manifest, SeedOutcome};
use crate::CliError;

pub const SWEEP_COLUMNS: [&str; 16] = [
    "geometry",
    "delta_target",
    "eps",
    "delta_c",
    "total_shots",
    "shots_per_region",
    "seed",
    "mode",
    "e_rho",
    "e_c",
    "g_rho",
    "gamma_rho",
    "l_bar",
    "c_bud",
    "w_bud",
    "status",
];

/// One CSV row. Aggregate rows carry `seed = "median"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub geometry: String,
    pub delta_target: f64,
    pub eps: f64,
    pub delta_c: Option<f64>,
    pub total_shots: u64,
    pub shots_per_region: u64,
    pub seed: String,
    pub mode: String,
    pub e_rho: Option<f64>,
    pub e_c: Option<f64>,
    pub g_rho: Option<f64>,
    pub gamma_rho: Option<f64>,
    pub l_bar: Option<f64>,
    pub c_bud: Option<f64>,
    pub w_bud: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub failures: usize,
}

impl SweepOutcome {
    pub fn medians(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.seed == "median")
    }
}

/// Median of the finite values, `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

struct Job {
    delta: f64,
    eps: f64,
    total: u64,
    seed: u64,
}

fn rows_for(config: &ExperimentConfig, job: &Job, t_r: u64, result: &Result<SeedOutcome, CliError>) -> Vec<SweepRow> {
    let base = |mode: Mode| SweepRow {
        geometry: config.geometry.to_string(),
        delta_target: job.delta,
        eps: job.eps,
        delta_c: None,
        total_shots: job.total,
        shots_per_region: t_r,
        seed: job.seed.to_string(),
        mode: mode.to_string(),
        e_rho: None,
        e_c: None,
        g_rho: None,
        gamma_rho: None,
        l_bar: None,
        c_bud: None,
        w_bud: None,
        status: "ok".into(),
    };
    config
        .modes
        .iter()
        .map(|&mode| {
            let mut row = base(mode);
            match result {
                Ok(outcome) => {
                    let m = &outcome.modes[&mode];
                    row.delta_c = Some(outcome.delta_c);
                    row.e_rho = Some(m.metrics.e_rho);
                    row.e_c = Some(m.metrics.e_c);
                    row.l_bar = Some(m.metrics.l_bar);
                    row.c_bud = Some(m.metrics.budgets.c_bud);
                    row.w_bud = Some(m.metrics.budgets.w_bud);
                    if mode == Mode::Joint {
                        row.g_rho = outcome.g_rho;
                        row.gamma_rho = outcome.gamma_rho;
                    }
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect()
}

fn aggregate(point: &[SweepRow], config: &ExperimentConfig) -> Vec<SweepRow> {
    config
        .modes
        .iter()
        .map(|&mode| {
            let rows: Vec<&SweepRow> = point.iter().filter(|r| r.mode == mode.name() && r.status == "ok").collect();
            let med = |f: fn(&SweepRow) -> Option<f64>| median(rows.iter().filter_map(|r| f(r)));
            let first = &point[0];
            SweepRow {
                geometry: first.geometry.clone(),
                delta_target: first.delta_target,
                eps: first.eps,
                delta_c: med(|r| r.delta_c),
                total_shots: first.total_shots,
                shots_per_region: first.shots_per_region,
                seed: "median".into(),
                mode: mode.to_string(),
                e_rho: med(|r| r.e_rho),
                e_c: med(|r| r.e_c),
                g_rho: med(|r| r.g_rho),
                gamma_rho: med(|r| r.gamma_rho),
                l_bar: med(|r| r.l_bar),
                c_bud: med(|r| r.c_bud),
                w_bud: med(|r| r.w_bud),
                status: format!("{} of {} seeds", rows.len(), config.seeds),
            }
        })
        .collect()
}

pub fn write_rows(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(SWEEP_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_sweep(config: &ExperimentConfig) -> Result<SweepOutcome, CliError> {
    let graph = build_geometry(config.geometry);
    if config.delta_grid.is_empty() || config.shots_grid.is_empty() {
        return Err(CliError::Config("sweep grids must be nonempty".into()));
    }
    let runs = config.delta_grid.len() * config.shots_grid.len() * config.seeds * config.modes.len();
    if runs > config.max_runs {
        return Err(CliError::Config(format!("sweep needs {runs} runs, above max_runs = {}", config.max_runs)));
    }
    if let Some(&t) = config.shots_grid.iter().find(|&&t| t < graph.n_regions() as u64) {
        return Err(CliError::Config(format!("total shots {t} leave no shots for {} regions", graph.n_regions())));
    }
    let m = 1usize << (2 * graph.regions.iter().map(Vec::len).max().unwrap_or(1));
    let eps_grid: Vec<f64> = config
        .delta_grid
        .iter()
        .map(|&d| {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(CliError::Config(format!("delta grid value {d} must be finite and nonnegative")));
            }
            Ok(calibrate_eps(m, d, config.calibration_seeds, config.calibration_seed)?)
        })
        .collect::<Result<_, _>>()?;

    let mut jobs = Vec::new();
    for (&delta, &eps) in config.delta_grid.iter().zip(&eps_grid) {
        for &total in &config.shots_grid {
            for i in 0..config.seeds {
                jobs.push(Job { delta, eps, total, seed: seed_for(config, i) });
            }
        }
    }
    let results: Vec<(Vec<SweepRow>, (usize, f64, f64, qtdm::instance::SeedLedger))> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, job)| {
            let t_r = job.total / graph.n_regions() as u64;
            let run = run_seed(config, &graph, job.eps, t_r, job.seed, None);
            let ledger = match &run {
                Ok((inst, _)) => (index, job.eps, inst.delta_c, inst.seeds.clone()),
                Err(_) => (index, job.eps, f64::NAN, qtdm::instance::SeedLedger::derive(job.seed, graph.n_regions())),
            };
            let outcome = run.map(|(_, o)| o);
            (rows_for(config, job, t_r, &outcome), ledger)
        })
        .collect();

    let mut rows = Vec::new();
    let mut ledgers = Vec::new();
    let mut failures = 0;
    for point in results.chunks(config.seeds) {
        let point_rows: Vec<SweepRow> = point.iter().flat_map(|(r, _)| r.clone()).collect();
        failures += point_rows.iter().filter(|r| r.status != "ok").count();
        rows.extend(point_rows.iter().cloned());
        rows.extend(aggregate(&point_rows, config));
        ledgers.extend(point.iter().map(|(_, l)| l.clone()));
    }
    fs::create_dir_all(&config.out)?;
    write_rows(&config.out.join("sweep.csv"), &rows)?;
    write_manifest(&config.out, "sweep", config, ledgers)?;
    Ok(SweepOutcome { rows, failures })
}
