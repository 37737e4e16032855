//! Generalized Gell-Mann basis of the traceless Hermitian matrices.
//!
//! The d²−1 elements satisfy tr(G_a G_b) = 2δ_ab, so together with the
//! identity they expand any Hermitian matrix:
//! H = (tr H / d)·𝟙 + Σ_a (tr(G_a H)/2)·G_a. The least-squares fitters use
//! exactly these coordinates; keeping the identity direction out of the
//! basis is what pins the affine fit's gauge.

use num_complex::Complex64;

use crate::hilbert::CMatrix;

/// The d²−1 generalized Gell-Mann matrices, ordered as all symmetric
/// off-diagonal pairs, then all antisymmetric pairs, then the d−1 diagonal
/// elements.
pub fn gell_mann_basis(d: usize) -> Vec<CMatrix> {
    assert!(d >= 1);
    let mut basis = Vec::with_capacity(d * d - 1);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);

    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = one;
            m[(k, j)] = one;
            basis.push(m);
        }
    }
    for j in 0..d {
        for k in (j + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = -i;
            m[(k, j)] = i;
            basis.push(m);
        }
    }
    for l in 1..d {
        let scale = Complex64::new((2.0 / (l as f64 * (l as f64 + 1.0))).sqrt(), 0.0);
        let mut m = CMatrix::zeros(d, d);
        for k in 0..l {
            m[(k, k)] = scale;
        }
        m[(l, l)] = -scale * Complex64::new(l as f64, 0.0);
        basis.push(m);
    }
    basis
}
