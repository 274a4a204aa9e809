use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{coords, hermitian_part, ComplexMatrix, DensityMatrix, ProbabilityVector, C64};
use crate::error::{invalid, Result};

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// `diag(R)` pushed back into `Q`.
///
/// Entries are drawn column by column, so the first column of the result
/// equals [`haar_state`] for the same `(dim, seed)`.
pub fn random_unitary(dim: usize, seed: u64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return invalid("unitary dimension must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        for i in 0..dim {
            g[(i, j)] = complex_gaussian(&mut rng);
        }
    }
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// `U|0…0⟩` for `U = random_unitary(dim, seed)`, without forming `U`.
pub fn haar_state(dim: usize, seed: u64) -> Result<Vec<C64>> {
    if dim == 0 {
        return invalid("state dimension must be positive");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(&mut rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    Ok(v)
}

/// Positions of `subset` inside the ascending `sites` list.
pub fn subset_positions(sites: &[usize], subset: &[usize]) -> Result<Vec<usize>> {
    subset
        .iter()
        .map(|s| {
            sites
                .binary_search(s)
                .map_err(|_| crate::QtdmError::InvalidArgument(format!("site {s} is not in {sites:?}")))
        })
        .collect()
}

/// Full-register basis offsets for every assignment of the qubits at
/// `positions` (first listed position is the most significant digit).
fn offsets(n: usize, positions: &[usize]) -> Vec<usize> {
    let k = positions.len();
    (0..1usize << k)
        .map(|idx| {
            positions
                .iter()
                .enumerate()
                .filter(|&(b, _)| idx >> (k - 1 - b) & 1 == 1)
                .map(|(_, &p)| 1usize << (n - 1 - p))
                .sum()
        })
        .collect()
}

fn split_offsets(sites: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if keep.is_empty() {
        return invalid("keep set must be nonempty");
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let kept = subset_positions(sites, &keep)?;
    let traced: Vec<usize> = (0..sites.len()).filter(|p| !kept.contains(p)).collect();
    let n = sites.len();
    Ok((offsets(n, &kept), offsets(n, &traced)))
}

fn reduce_matrix(mat: &ComplexMatrix, kept: &[usize], traced: &[usize]) -> ComplexMatrix {
    let d = kept.len();
    let mut out = ComplexMatrix::zeros(d, d);
    for (a, &ka) in kept.iter().enumerate() {
        for (b, &kb) in kept.iter().enumerate() {
            let mut acc = C64::zero();
            for &t in traced {
                acc += mat[(ka + t, kb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Reduced state on `keep_sites`, obtained by summing the traced sites over
/// the computational basis.
pub fn partial_trace(rho: &DensityMatrix, keep_sites: &[usize]) -> Result<DensityMatrix> {
    let (kept, traced) = split_offsets(rho.sites(), keep_sites)?;
    let mut keep = keep_sites.to_vec();
    keep.sort_unstable();
    keep.dedup();
    DensityMatrix::from_parts(keep, reduce_matrix(rho.matrix(), &kept, &traced))
}

/// Reduced state of the pure state `psi` (over `sites`) on `keep_sites`.
pub fn partial_trace_pure(psi: &[C64], sites: &[usize], keep_sites: &[usize]) -> Result<ComplexMatrix> {
    if psi.len() != 1usize << sites.len() {
        return invalid(format!("state vector length {} does not match {} sites", psi.len(), sites.len()));
    }
    let (kept, traced) = split_offsets(sites, keep_sites)?;
    let d = kept.len();
    let mut out = ComplexMatrix::zeros(d, d);
    for (a, &ka) in kept.iter().enumerate() {
        for (b, &kb) in kept.iter().enumerate().skip(a) {
            let mut acc = C64::zero();
            for &t in traced.iter() {
                acc += psi[ka + t] * psi[kb + t].conj();
            }
            out[(a, b)] = acc;
            out[(b, a)] = acc.conj();
        }
    }
    Ok(out)
}

/// Real matrix of the partial trace acting on Hermitian coordinates
/// (see [`coords::to_coords`]).
pub fn partial_trace_map(sites: &[usize], keep_sites: &[usize]) -> Result<DMatrix<f64>> {
    let (kept, traced) = split_offsets(sites, keep_sites)?;
    let dim = 1usize << sites.len();
    let n = dim * dim;
    let dk = kept.len();
    let mut map = DMatrix::zeros(dk * dk, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let h = coords::from_coords(&e, dim);
        let reduced = reduce_matrix(&h, &kept, &traced);
        map.set_column(j, &coords::to_coords(&reduced));
        e[j] = 0.0;
    }
    Ok(map)
}

/// Euclidean projection onto the probability simplex by sorting and
/// thresholding.
pub fn project_simplex(v: &[f64]) -> Result<ProbabilityVector> {
    if v.is_empty() {
        return invalid("cannot project an empty vector");
    }
    if v.iter().any(|x| !x.is_finite()) {
        return invalid("vector has non-finite entries");
    }
    let mut out = v.to_vec();
    let mut scratch = Vec::with_capacity(v.len());
    project_simplex_in_place(&mut out, &mut scratch);
    Ok(ProbabilityVector::from_vec_unchecked(out))
}

/// In-place variant of [`project_simplex`] for hot loops; `scratch` is reused
/// between calls. Inputs must be finite and nonempty.
pub fn project_simplex_in_place(v: &mut [f64], scratch: &mut Vec<f64>) {
    scratch.clear();
    scratch.extend_from_slice(v);
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Frobenius-nearest density matrix: symmetrize, diagonalize, project the
/// spectrum onto the simplex.
pub(crate) fn project_density_matrix(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid("matrix has non-finite entries");
    }
    let eig = SymmetricEigen::new(hermitian_part(h));
    let mut lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut scratch = Vec::with_capacity(lambda.len());
    project_simplex_in_place(&mut lambda, &mut scratch);
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * lambda[j]);
    Ok(hermitian_part(&(scaled * v.adjoint())))
}

pub fn project_density(h: &ComplexMatrix, sites: Vec<usize>) -> Result<DensityMatrix> {
    let dim = h.nrows();
    if h.ncols() != dim {
        return invalid("matrix is not square");
    }
    DensityMatrix::from_parts(sites, project_density_matrix(h)?)
}

/// Projects Hermitian coordinates onto the density set, in place.
pub(crate) fn project_density_coords(x: &mut DVector<f64>, dim: usize) -> Result<()> {
    let h = coords::from_coords(x.as_slice(), dim);
    *x = coords::to_coords(&project_density_matrix(&h)?);
    Ok(())
}
