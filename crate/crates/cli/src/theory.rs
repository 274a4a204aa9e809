//! Identifiability, growth, likelihood and scaling checks on fixture-scale
//! problems.

use std::fs;

use nalgebra::DVector;
use qtdm::instance::{gen_confusion, make_global_state, sample_shots, ConfusionMatrix};
use qtdm::metrics::{scaling_bounds_check, ScalingReport};
use qtdm::qmat::{born, tensor_povm, ProbabilityVector};
use qtdm::regions::{build_geometry, GeometryKind};
use qtdm::theory::{
    full_confusion_kernel_lower_bound, identifiability_report, kl_mle_identity_check, linearization_remainder,
    quadratic_growth_probe, standard_fixtures, GrowthProbe, IdentifiabilityReport, Parameterization, TheoryFixture,
    LinearizedModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::run::write_json;
use crate::CliError;

pub const GROWTH_TS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
pub const DIRECTIONS_PER_FIXTURE: usize = 5;
pub const KL_FIXTURES: usize = 50;
pub const KL_SHOTS: u64 = 1_000;
pub const KL_TOL: f64 = 1e-9;
pub const HALVING_BAND: (f64, f64) = (3.5, 4.5);
pub const DECADE_BAND: (f64, f64) = (80.0, 120.0);

#[derive(Clone, Debug, Serialize)]
pub struct FiniteDifference {
    /// `R(t) / R(t/2)` at `t = 1e-3`.
    pub halving_ratios: Vec<f64>,
    /// `R(1e-3) / R(1e-4)`.
    pub decade_ratios: Vec<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthEntry {
    pub direction: &'static str,
    pub flag: &'static str,
    pub probe: GrowthProbe,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureReport {
    pub name: String,
    pub full: IdentifiabilityReport,
    pub tensor: IdentifiabilityReport,
    pub finite_difference: FiniteDifference,
    pub growth: Vec<GrowthEntry>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KlSummary {
    pub fixtures: usize,
    pub max_rel_discrepancy: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryScaling {
    pub geometry: GeometryKind,
    pub full_confusion_kernel_lower_bound: String,
    pub scaling: ScalingReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub artifact: String,
    pub seed: u64,
    pub fixtures: Vec<FixtureReport>,
    pub kl: KlSummary,
    pub geometries: Vec<GeometryScaling>,
    pub passed: bool,
}

fn random_unit(k: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(k, |_, _| rng.random::<f64>() - 0.5).normalize()
}

pub fn finite_difference(fixture: &TheoryFixture, model: &LinearizedModel, n: usize, seed: u64) -> FiniteDifference {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut halving_ratios = Vec::with_capacity(n);
    let mut decade_ratios = Vec::with_capacity(n);
    for _ in 0..n {
        let v = random_unit(model.tangent_dim(), &mut rng);
        let r3 = linearization_remainder(fixture, model, &v, 1e-3);
        halving_ratios.push(r3 / linearization_remainder(fixture, model, &v, 0.5e-3));
        decade_ratios.push(r3 / linearization_remainder(fixture, model, &v, 1e-4));
    }
    let inside = |x: f64, (lo, hi): (f64, f64)| (lo..=hi).contains(&x);
    let passed = halving_ratios.iter().all(|&x| inside(x, HALVING_BAND)) && decade_ratios.iter().all(|&x| inside(x, DECADE_BAND));
    FiniteDifference { halving_ratios, decade_ratios, passed }
}

/// Relative discrepancy of the likelihood identity on a random interior
/// one- or two-qubit fixture.
pub fn kl_fixture(seed: u64) -> Result<f64, CliError> {
    let n = 1 + (seed % 2) as usize;
    let rho = make_global_state(n, 0.3, seed)?;
    let povm = tensor_povm(n)?;
    let m = povm.n_outcomes();
    let raw = gen_confusion(m, 0.3, seed)?;
    let c = ConfusionMatrix::new(raw.matrix() * 0.9 + nalgebra::DMatrix::from_element(m, m, 0.1 / m as f64))?;
    let q = ProbabilityVector::new(c.apply(born(&rho, &povm)?.as_slice()))?;
    let counts = sample_shots(&q, KL_SHOTS, seed)?.counts;
    Ok(kl_mle_identity_check(&counts, &rho, &povm, &c, KL_SHOTS)?.rel_discrepancy)
}

pub fn kl_summary(seed: u64) -> Result<KlSummary, CliError> {
    let mut worst = 0.0f64;
    for i in 0..KL_FIXTURES as u64 {
        worst = worst.max(kl_fixture(seed.wrapping_mul(1000).wrapping_add(i))?);
    }
    Ok(KlSummary { fixtures: KL_FIXTURES, max_rel_discrepancy: worst, passed: worst < KL_TOL })
}

fn fixture_report(name: String, fixture: &TheoryFixture, seed: u64) -> Result<FixtureReport, CliError> {
    let (model, full) = identifiability_report(fixture, Parameterization::FullConfusion)?;
    let (_, tensor) = identifiability_report(fixture, Parameterization::TensorConfusion)?;
    let finite_difference = finite_difference(fixture, &model, DIRECTIONS_PER_FIXTURE, seed);
    let mut growth = Vec::new();
    let v = full.complement_direction(seed);
    let probe = quadratic_growth_probe(fixture, &model, &full, &v, &GROWTH_TS)?;
    growth.push(GrowthEntry { direction: "kernel complement", flag: flag(&probe), probe });
    if let Some(v) = full.kernel_direction(seed) {
        let probe = quadratic_growth_probe(fixture, &model, &full, &v, &GROWTH_TS)?;
        growth.push(GrowthEntry { direction: "kernel", flag: flag(&probe), probe });
    }
    Ok(FixtureReport { name, full, tensor, finite_difference, growth })
}

fn flag(p: &GrowthProbe) -> &'static str {
    if p.quadratic_growth {
        "quadratic growth"
    } else {
        "no quadratic growth"
    }
}

pub fn outcome_counts(graph: &qtdm::regions::RegionGraph, override_m: Option<u64>) -> Vec<u64> {
    (0..graph.n_regions()).map(|r| override_m.unwrap_or(4u64.pow(graph.region_qubits(r) as u32))).collect()
}

pub fn cmd_theory(config: &ExperimentConfig) -> Result<TheoryReport, CliError> {
    let seed = config.theory_seed;
    let mut geometries = Vec::new();
    for kind in GeometryKind::ALL {
        let g = build_geometry(kind);
        let m_r = outcome_counts(&g, config.outcome_count);
        let scaling = scaling_bounds_check(&g, &m_r, 1.0)?;
        let bound = full_confusion_kernel_lower_bound(&g, &m_r)?;
        geometries.push(GeometryScaling { geometry: kind, full_confusion_kernel_lower_bound: bound.to_string(), scaling });
    }
    let fixtures = standard_fixtures(seed)?
        .into_iter()
        .enumerate()
        .map(|(i, (name, f))| fixture_report(name, &f, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let kl = kl_summary(seed)?;
    let passed =
        kl.passed && geometries.iter().all(|g| g.scaling.passed) && fixtures.iter().all(|f| f.finite_difference.passed);
    let report = TheoryReport { artifact: qtdm::VERSION.to_string(), seed, fixtures, kl, geometries, passed };
    fs::create_dir_all(&config.out)?;
    write_json(&config.out.join("theory.json"), &report)?;
    Ok(report)
}
