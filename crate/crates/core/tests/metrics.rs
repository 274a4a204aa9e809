use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use qtdm::instance::ConfusionMatrix;
use qtdm::metrics::{
    budgets, confusion_error, consensus_residual, oracle_gap, optimality_gap, recovery_gain, scaling_bounds_check,
    state_error,
};
use qtdm::qmat::{haar_state, tensor_povm, DensityMatrix};
use qtdm::regions::{build_geometry, GeometryKind, RegionGraph};
use qtdm::solver::{initial_state, ProblemData};
use qtdm::QtdmError;

#[test]
fn state_error_examples() {
    let psi = haar_state(8, 3).unwrap();
    let pure = DensityMatrix::pure(vec![0, 1, 2], &psi).unwrap();
    assert_eq!(state_error(&[pure.clone()], &[pure.clone()]).unwrap(), 0.0);

    let mixed = DensityMatrix::maximally_mixed(vec![0, 1, 2]).unwrap();
    let e = state_error(&[mixed], &[pure.clone()]).unwrap();
    assert!((e - (1.0f64 - 1.0 / 8.0).sqrt()).abs() < 1e-12);

    let other = DensityMatrix::pure(vec![0, 1, 2], &haar_state(8, 4).unwrap()).unwrap();
    let a = other.distance(&pure);
    let mixed = DensityMatrix::maximally_mixed(vec![0, 1, 2]).unwrap();
    let b = mixed.distance(&pure);
    let two = state_error(&[other, mixed], &[pure.clone(), pure.clone()]).unwrap();
    assert!((two - 0.5 * (a + b)).abs() < 1e-12);

    assert!(state_error(&[], &[pure]).is_err());
}

#[test]
fn confusion_error_examples() {
    let id = ConfusionMatrix::identity(4);
    assert_eq!(confusion_error(&[id.clone()], &[id.clone()]).unwrap(), 0.0);
    let flat = ConfusionMatrix::new(DMatrix::from_element(4, 4, 0.25)).unwrap();
    // ‖J/4 − I‖_F² = 4·(3/4)² + 12·(1/4)² = 3, ‖I‖_F = 2
    let e = confusion_error(&[flat], &[id.clone()]).unwrap();
    assert!((e - 3f64.sqrt() / 2.0).abs() < 1e-12);
    assert!(confusion_error(&[ConfusionMatrix::identity(2)], &[id]).is_err());
}

fn pair_problem() -> ProblemData {
    let graph = RegionGraph::from_regions(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
    let povm = tensor_povm(2).unwrap();
    ProblemData::with_povms(&graph, &[povm.clone(), povm], vec![vec![1.0 / 16.0; 16]; 2]).unwrap()
}

#[test]
fn consensus_residual_examples() {
    let problem = pair_problem();
    let mut state = initial_state(&problem, vec![DMatrix::identity(16, 16); 2]);
    assert!(consensus_residual(&state, &problem) < 1e-15);

    // shift the consensus variable by a direction of norm 0.3
    let mut v = DVector::zeros(4);
    v[1] = 0.3;
    state.consensus[0] += v;
    let r = consensus_residual(&state, &problem);
    assert!((r - 0.18f64.sqrt()).abs() < 1e-12);
    assert!((r - 0.4243).abs() < 1e-4);

    let graph = RegionGraph::from_regions(2, vec![vec![0], vec![1]]).unwrap();
    let povm = tensor_povm(1).unwrap();
    let lone = ProblemData::with_povms(&graph, &[povm.clone(), povm], vec![vec![0.25; 4]; 2]).unwrap();
    let state = initial_state(&lone, vec![DMatrix::identity(4, 4); 2]);
    assert_eq!(consensus_residual(&state, &lone), 0.0);
}

#[test]
fn optimality_gap_examples() {
    assert_eq!(optimality_gap(0.7, 0.7), 0.0);
    assert_eq!(optimality_gap(0.7 + 1e-13, 0.7), 0.0);
    assert!((optimality_gap(0.6, 0.5) - 0.1).abs() < 1e-15);
    assert!((optimality_gap(5.0, 4.0) - 0.25).abs() < 1e-15);
}

#[test]
fn gains_examples() {
    let g = recovery_gain(0.146, 0.117).unwrap();
    assert!((g - 19.9).abs() < 0.05, "{g}");
    assert_eq!(recovery_gain(0.2, 0.2).unwrap(), 0.0);
    assert_eq!(oracle_gap(0.2, 0.1, 0.1).unwrap(), 100.0);
    assert!(matches!(oracle_gap(0.1, 0.1, 0.1), Err(QtdmError::UndefinedMetric(_))));
    assert!(matches!(oracle_gap(0.1, 0.1, 0.2), Err(QtdmError::UndefinedMetric(_))));
    assert!(matches!(recovery_gain(0.0, 0.1), Err(QtdmError::UndefinedMetric(_))));
}

proptest! {
    #[test]
    fn gains_are_scale_invariant(e_o in 0.01f64..0.5, d1 in 0.01f64..0.5, d2 in 0.0f64..0.5, s in 0.1f64..10.0) {
        let e_i = e_o + d1 + d2;
        let e_j = e_o + d2;
        let g = recovery_gain(e_i, e_j).unwrap();
        let gs = recovery_gain(s * e_i, s * e_j).unwrap();
        prop_assert!((g - gs).abs() < 1e-9);
        let o = oracle_gap(e_i, e_j, e_o).unwrap();
        let os = oracle_gap(s * e_i, s * e_j, s * e_o).unwrap();
        prop_assert!((o - os).abs() < 1e-9);
    }
}

fn sizes(graph: &RegionGraph) -> Vec<u64> {
    (0..graph.n_regions()).map(|r| 4u64.pow(graph.region_qubits(r) as u32)).collect()
}

#[test]
fn ring_budgets() {
    let ring = build_geometry(GeometryKind::Ring);
    let b = budgets(&ring, &sizes(&ring), 30.0).unwrap();
    assert_eq!(b.comm_per_iteration, 96);
    assert_eq!(b.c_bud, 2880.0);
    assert_eq!(b.work_per_iteration, 6 * 256 + 6 * 65536);
    assert_eq!(b.w_bud, 11_842_560.0);
    assert!((b.w_bud / 1.18e7 - 1.0).abs() < 0.005);
    assert_eq!(b.n_comm, 192);
    assert_eq!(b.p_reg, 6 * (255 + 256 * 255));
    let m = 4u128.pow(12);
    assert_eq!(b.p_glob, (m - 1) + m * (m - 1));
    for l_bar in [0.5, 17.0, 30.0, 33.3] {
        let b = budgets(&ring, &sizes(&ring), l_bar).unwrap();
        assert_eq!(b.comm_work_ratio(), 96.0 / 394_752.0);
        // the float budgets agree to rounding
        assert!((b.c_bud / b.w_bud / b.comm_work_ratio() - 1.0).abs() <= 4.0 * f64::EPSILON);
    }
}

#[test]
fn hub_communication_per_iteration() {
    let hub = build_geometry(GeometryKind::Hub);
    let b = budgets(&hub, &sizes(&hub), 34.0).unwrap();
    assert_eq!(b.comm_per_iteration, 15 * 16);
    assert_eq!(b.c_bud, 8160.0);
}

#[test]
fn budgets_are_pure() {
    let torus = build_geometry(GeometryKind::Torus);
    let a = budgets(&torus, &sizes(&torus), 12.25).unwrap();
    let b = budgets(&torus, &sizes(&torus), 12.25).unwrap();
    assert_eq!(a, b);
    assert!(budgets(&torus, &sizes(&torus), -1.0).is_err());
}

#[test]
fn scaling_bounds_hold_on_every_geometry() {
    for kind in GeometryKind::ALL {
        let g = build_geometry(kind);
        let report = scaling_bounds_check(&g, &sizes(&g), 1.0).unwrap();
        assert_eq!(report.checks.len(), 5);
        assert!(report.passed, "{kind}: {:?}", report.checks);
        // other admissible POVM sizes
        let doubled: Vec<u64> = sizes(&g).iter().map(|m| 2 * m).collect();
        assert!(scaling_bounds_check(&g, &doubled, 2.0).unwrap().passed);
    }
}

#[test]
fn torus_communication_bound() {
    let g = build_geometry(GeometryKind::Torus);
    let report = scaling_bounds_check(&g, &sizes(&g), 1.0).unwrap();
    let c = report.checks.iter().find(|c| c.name == "n_comm_upper").unwrap();
    assert_eq!(c.lhs, "384");
    assert_eq!(c.rhs, "576");
    assert_eq!(c.slack, 192.0);
}

#[test]
fn hub_ratio_bound_is_exact() {
    let g = build_geometry(GeometryKind::Hub);
    let report = scaling_bounds_check(&g, &sizes(&g), 1.0).unwrap();
    let c = report.checks.iter().find(|c| c.name == "comm_ratio_upper").unwrap();
    // d_max = 5, q_min = 4, q_ov = 2: 5 / (1 − 4⁻⁴) · 4^(2 − 8) = 5·256/255 / 4096
    let rhs = BigRational::new(BigInt::from(5 * 256), BigInt::from(255 * 4096));
    assert_eq!(c.rhs, format!("{}/{}", rhs.numer(), rhs.denom()));
    // N_comm = 2·15·16 = 480, P_reg = 6·(255 + 256·255)
    let lhs = BigRational::new(BigInt::from(480), BigInt::from(6 * (255 + 256 * 255)));
    assert_eq!(c.lhs, format!("{}/{}", lhs.numer(), lhs.denom()));
    assert!(c.holds);
}

#[test]
fn scaling_precondition_is_enforced() {
    let g = build_geometry(GeometryKind::Ring);
    let mut m = sizes(&g);
    m[2] = 255;
    assert!(matches!(scaling_bounds_check(&g, &m, 1.0), Err(QtdmError::InvalidArgument(_))));
    let m: Vec<u64> = sizes(&g).iter().map(|x| 3 * x).collect();
    assert!(scaling_bounds_check(&g, &m, 2.0).is_err());
    assert!(scaling_bounds_check(&g, &sizes(&g), 0.5).is_err());
}
