use qtdm::qmat::{
    born, from_coords, haar_state, identity, partial_trace, partial_trace_map, partial_trace_pure, project_density,
    project_simplex, tensor_povm, to_coords, ComplexMatrix, DensityMatrix, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

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
    let mut out = ComplexMatrix::zeros(dk, dk);
    let full = |kbits: usize, tbits: usize| {
        let mut idx = 0usize;
        for (i, &s) in keep.iter().enumerate() {
            if kbits >> (keep.len() - 1 - i) & 1 == 1 {
                idx |= 1 << (n - 1 - s);
            }
        }
        for (i, &s) in traced.iter().enumerate() {
            if tbits >> (traced.len() - 1 - i) & 1 == 1 {
                idx |= 1 << (n - 1 - s);
            }
        }
        idx
    };
    for a in 0..dk {
        for b in 0..dk {
            for t in 0..1 << traced.len() {
                out[(a, b)] += rho[(full(a, t), full(b, t))];
            }
        }
    }
    out
}

fn max_abs(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn partial_trace_matches_index_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for trial in 0..100 {
        let n = 1 + trial % 3;
        let rho = random_density(n, &mut rng);
        let mut keep: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        if keep.is_empty() {
            keep.push(rng.random_range(0..n));
        }
        let got = partial_trace(&rho, &keep).unwrap();
        let want = brute_force_trace(rho.matrix(), n, &keep);
        assert!(max_abs(&(got.matrix() - &want)) < 1e-12, "trial {trial}");

        // the coordinate map agrees
        let map = partial_trace_map(rho.sites(), &keep).unwrap();
        let via = from_coords((map * to_coords(rho.matrix())).as_slice(), 1 << keep.len());
        assert!(max_abs(&(via - &want)) < 1e-12);
    }
}

#[test]
fn partial_trace_examples() {
    // Bell state: every single-site marginal is I/2
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = [C64::from(h), C64::from(0.0), C64::from(0.0), C64::from(h)];
    let r = partial_trace_pure(&bell, &[0, 1], &[1]).unwrap();
    assert!(max_abs(&(r - identity(2) * C64::from(0.5))) < 1e-15);

    // product state: reduction returns the factor
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_density(1, &mut rng);
    let b = DensityMatrix::new(vec![1, 2], random_density(2, &mut rng).into_matrix()).unwrap();
    let ab = DensityMatrix::new(vec![0, 1, 2], a.tensor(&b).unwrap().into_matrix()).unwrap();
    assert!(max_abs(&(partial_trace(&ab, &[0]).unwrap().matrix() - a.matrix())) < 1e-14);
    assert!(max_abs(&(partial_trace(&ab, &[1, 2]).unwrap().matrix() - b.matrix())) < 1e-14);

    // keeping everything is the identity; unknown sites are rejected
    assert!(max_abs(&(partial_trace(&ab, &[2, 0, 1]).unwrap().matrix() - ab.matrix())) < 1e-15);
    assert!(partial_trace(&ab, &[5]).is_err());
    assert!(partial_trace(&ab, &[]).is_err());
}

#[test]
fn pure_trace_agrees_with_dense() {
    for seed in 0..10 {
        let psi = haar_state(8, seed).unwrap();
        let dense = DensityMatrix::pure(vec![2, 5, 9], &psi).unwrap();
        let a = partial_trace_pure(&psi, &[2, 5, 9], &[2, 9]).unwrap();
        let b = partial_trace(&dense, &[2, 9]).unwrap();
        assert!(max_abs(&(a - b.matrix())) < 1e-14);
    }
}

// θ with Σ max(v − θ, 0) = 1 found by bisection.
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

#[test]
fn simplex_projection_matches_threshold_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let n = 1 + trial % 17;
        let scale = [0.1, 1.0, 10.0][trial % 3];
        let v: Vec<f64> = (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let got = project_simplex(&v).unwrap();
        let want = simplex_oracle(&v);
        for (a, b) in got.as_slice().iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "trial {trial}: {v:?}");
        }
    }
}

#[test]
fn simplex_projection_examples() {
    assert_eq!(project_simplex(&[0.2, 0.3, 0.5]).unwrap().as_slice(), &[0.2, 0.3, 0.5]);
    let p = project_simplex(&[2.0, 0.0]).unwrap();
    assert_eq!(p.as_slice(), &[1.0, 0.0]);
    let p = project_simplex(&[0.0, 0.0, 0.0, 0.0]).unwrap();
    assert!(p.as_slice().iter().all(|&x| (x - 0.25).abs() < 1e-15));
    assert!(project_simplex(&[]).is_err());
    assert!(project_simplex(&[f64::NAN, 1.0]).is_err());
}

#[test]
fn born_examples() {
    let sic = tensor_povm(1).unwrap();
    let zero = DensityMatrix::pure(vec![0], &[C64::from(1.0), C64::from(0.0)]).unwrap();
    let p = born(&zero, &sic).unwrap();
    let s = 1.0 / 3f64.sqrt();
    // r_z components of the tetrahedron: +s, −s, −s, +s
    let want = [(1.0 + s) / 4.0, (1.0 - s) / 4.0, (1.0 - s) / 4.0, (1.0 + s) / 4.0];
    for (a, b) in p.as_slice().iter().zip(want) {
        assert!((a - b).abs() < 1e-15);
    }
    let mixed = DensityMatrix::maximally_mixed(vec![0, 1, 2]).unwrap();
    let p = born(&mixed, &tensor_povm(3).unwrap()).unwrap();
    assert!(p.as_slice().iter().all(|&x| (x - 1.0 / 64.0).abs() < 1e-15));

    // the Born matrix reproduces the trace formula
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho = random_density(2, &mut rng);
    let povm = tensor_povm(2).unwrap();
    let via = povm.born_matrix() * to_coords(rho.matrix());
    let direct = born(&rho, &povm).unwrap();
    for (a, b) in via.iter().zip(direct.as_slice()) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(born(&rho, &tensor_povm(1).unwrap()).is_err());
}

#[test]
fn density_projection_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rho = random_density(2, &mut rng);
    let p = project_density(rho.matrix(), vec![0, 1]).unwrap();
    assert!(p.distance(&rho) < 1e-12);

    let h = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::from(0.6),
        C64::from(0.6),
        C64::from(-0.2),
        C64::from(0.0),
    ]));
    let p = project_density(&h, vec![0, 1]).unwrap();
    let want = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C64::from(0.5),
        C64::from(0.5),
        C64::from(0.0),
        C64::from(0.0),
    ]));
    assert!(max_abs(&(p.matrix() - want)) < 1e-14);
}

#[test]
fn density_projection_is_nearest() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let g = ComplexMatrix::from_fn(4, 4, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let h = (&g + g.adjoint()) * C64::from(0.5);
        let p = project_density(&h, vec![0, 1]).unwrap();
        let d = (p.matrix() - &h).norm();
        for _ in 0..50 {
            let other = random_density(2, &mut rng);
            assert!((other.matrix() - &h).norm() >= d - 1e-12);
        }
        assert!(DensityMatrix::new(vec![0, 1], p.into_matrix()).is_ok());
    }
}

#[test]
fn density_constructor_rejects_invalid_matrices() {
    let not_unit = identity(2);
    assert!(DensityMatrix::new(vec![0], not_unit).is_err());
    let neg = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::from(1.5), C64::from(-0.5)]));
    assert!(DensityMatrix::new(vec![0], neg).is_err());
    let mut skew = identity(2) * C64::from(0.5);
    skew[(0, 1)] = C64::from(0.1);
    assert!(DensityMatrix::new(vec![0], skew).is_err());
    assert!(DensityMatrix::new(vec![1, 0], identity(4) * C64::from(0.25)).is_err());
}
