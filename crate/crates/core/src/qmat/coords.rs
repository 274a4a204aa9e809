//! Real coordinates for Hermitian matrices.
//!
//! A `Q×Q` Hermitian matrix maps to `Q²` reals: the `Q` diagonal entries,
//! then `√2·Re H_ij, √2·Im H_ij` for each `i < j` in row-major order. The map
//! is an isometry from the Frobenius inner product to the Euclidean one.

use nalgebra::DVector;

use super::{ComplexMatrix, C64};

pub fn coord_dim(dim: usize) -> usize {
    dim * dim
}

pub fn to_coords(h: &ComplexMatrix) -> DVector<f64> {
    let n = h.nrows();
    let mut out = DVector::zeros(n * n);
    for i in 0..n {
        out[i] = h[(i, i)].re;
    }
    let s = std::f64::consts::SQRT_2;
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            // average the two triangles so a slightly non-Hermitian input
            // lands on its Hermitian part
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            out[k] = s * z.re;
            out[k + 1] = s * z.im;
            k += 2;
        }
    }
    out
}

pub fn from_coords(x: &[f64], dim: usize) -> ComplexMatrix {
    debug_assert_eq!(x.len(), dim * dim);
    let mut h = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = C64::new(x[i], 0.0);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = dim;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let z = C64::new(s * x[k], s * x[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

/// Coordinates of the identity, so that `Tr(H) = trace_functional · coords(H)`.
pub fn trace_functional(dim: usize) -> DVector<f64> {
    let mut t = DVector::zeros(dim * dim);
    for i in 0..dim {
        t[i] = 1.0;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::frobenius;

    #[test]
    fn coordinates_are_an_isometry() {
        let mut h = ComplexMatrix::zeros(3, 3);
        h[(0, 0)] = C64::new(0.5, 0.0);
        h[(1, 1)] = C64::new(-0.25, 0.0);
        h[(0, 2)] = C64::new(0.1, -0.3);
        h[(2, 0)] = C64::new(0.1, 0.3);
        h[(1, 2)] = C64::new(0.0, 0.7);
        h[(2, 1)] = C64::new(0.0, -0.7);
        let x = to_coords(&h);
        assert!((x.norm() - frobenius(&h)).abs() < 1e-15);
        let back = from_coords(x.as_slice(), 3);
        assert!(frobenius(&(back - &h)) < 1e-15);
    }

    #[test]
    fn trace_functional_reads_the_trace() {
        let mut h = ComplexMatrix::identity(4, 4) * C64::new(0.25, 0.0);
        h[(1, 3)] = C64::new(0.2, 0.1);
        h[(3, 1)] = C64::new(0.2, -0.1);
        let x = to_coords(&h);
        assert!((trace_functional(4).dot(&x) - 1.0).abs() < 1e-15);
    }
}
