//! Benchmark table over run directories: seed-wise medians per geometry.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qtdm::regions::GeometryKind;
use qtdm::solver::Mode;

use crate::run::{RunReport, SeedOutcome};
use crate::sweep::median;
use crate::CliError;

pub const TABLE_COLUMNS: [&str; 12] = [
    "geometry",
    "q",
    "R",
    "q_ov",
    "e_rho_ideal",
    "e_rho_joint",
    "e_rho_oracle",
    "e_c_joint",
    "g_rho_pct",
    "gamma_rho_pct",
    "c_bud",
    "w_bud",
];

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub geometry: GeometryKind,
    pub complete: bool,
    pub q: usize,
    pub regions: usize,
    pub q_ov: usize,
    pub e_rho_ideal: Option<f64>,
    pub e_rho_joint: Option<f64>,
    pub e_rho_oracle: Option<f64>,
    pub e_c_joint: Option<f64>,
    pub g_rho: Option<f64>,
    pub gamma_rho: Option<f64>,
    pub c_bud: Option<f64>,
    pub w_bud: Option<f64>,
}

impl TableRow {
    fn label(&self) -> String {
        if self.complete {
            self.geometry.to_string()
        } else {
            format!("{} (incomplete)", self.geometry)
        }
    }
}

pub fn load_reports(dirs: &[PathBuf]) -> Result<Vec<RunReport>, CliError> {
    dirs.iter()
        .map(|d| {
            let path = d.join("report.json");
            let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        })
        .collect()
}

pub fn build_table(reports: &[RunReport]) -> Vec<TableRow> {
    let mut groups: BTreeMap<GeometryKind, (&RunReport, Vec<&SeedOutcome>)> = BTreeMap::new();
    for rep in reports {
        groups.entry(rep.geometry).or_insert_with(|| (rep, Vec::new())).1.extend(rep.seeds.iter());
    }
    groups
        .into_iter()
        .map(|(geometry, (rep, seeds))| {
            let e = |mode: Mode| median(seeds.iter().filter_map(|s| s.e_rho(mode)));
            let joint = |f: fn(&crate::run::ModeOutcome) -> f64| median(seeds.iter().filter_map(|s| s.modes.get(&Mode::Joint).map(f)));
            let complete = seeds.iter().all(|s| Mode::ALL.iter().all(|m| s.modes.contains_key(m)));
            TableRow {
                geometry,
                complete,
                q: rep.n_sites,
                regions: rep.n_regions,
                q_ov: rep.overlap_qubits,
                e_rho_ideal: e(Mode::Ideal),
                e_rho_joint: e(Mode::Joint),
                e_rho_oracle: e(Mode::Oracle),
                e_c_joint: joint(|m| m.metrics.e_c),
                g_rho: median(seeds.iter().filter_map(|s| s.g_rho)),
                gamma_rho: median(seeds.iter().filter_map(|s| s.gamma_rho)),
                c_bud: joint(|m| m.metrics.budgets.c_bud),
                w_bud: joint(|m| m.metrics.budgets.w_bud),
            }
        })
        .collect()
}

fn fixed(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

fn sci(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.2e}")).unwrap_or_default()
}

fn cells(row: &TableRow) -> Vec<String> {
    vec![
        row.label(),
        row.q.to_string(),
        row.regions.to_string(),
        row.q_ov.to_string(),
        fixed(row.e_rho_ideal, 3),
        fixed(row.e_rho_joint, 3),
        fixed(row.e_rho_oracle, 3),
        fixed(row.e_c_joint, 3),
        fixed(row.g_rho, 1),
        fixed(row.gamma_rho, 1),
        sci(row.c_bud),
        sci(row.w_bud),
    ]
}

pub fn render_csv(rows: &[TableRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_COLUMNS)?;
    for row in rows {
        w.write_record(cells(row))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_text(rows: &[TableRow]) -> String {
    let table: Vec<Vec<String>> =
        std::iter::once(TABLE_COLUMNS.iter().map(|s| s.to_string()).collect()).chain(rows.iter().map(cells)).collect();
    let widths: Vec<usize> = (0..TABLE_COLUMNS.len()).map(|j| table.iter().map(|r| r[j].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (cell, &w))| if j == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

pub fn cmd_report(dirs: &[PathBuf], out: &Path) -> Result<Vec<TableRow>, CliError> {
    if dirs.is_empty() {
        return Err(CliError::Config("report needs at least one run directory".into()));
    }
    let rows = build_table(&load_reports(dirs)?);
    fs::create_dir_all(out)?;
    fs::write(out.join("table.csv"), render_csv(&rows)?)?;
    fs::write(out.join("table.txt"), render_text(&rows))?;
    Ok(rows)
}
