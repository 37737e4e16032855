//! Dense complex linear algebra for projectors and measurement tuples.
//!
//! A measurement outcome is labeled by a projector (Hermitian idempotent);
//! a projective measurement is an ordered tuple of mutually orthogonal
//! projectors summing to the identity. This module owns those types, their
//! invariant checks, and the Haar-random samplers used by every verifier.
//!
//! All values are immutable after construction and all sampling takes an
//! explicit RNG, so concurrent use only requires independent RNG streams.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default tolerance for structural invariants (Hermiticity, idempotence,
/// orthogonality, completeness). Double precision at dimensions <= 16 keeps
/// all of these comfortably below 1e-9.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Dimensions above this are rejected by the samplers; every verifier in the
/// crate is O(d^6) or cheaper, which stays at desk scale only for small d.
pub const MAX_DIMENSION: usize = 16;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("vector norm {norm} is not 1 within {tol:e}")]
    NotNormalized { norm: f64, tol: f64 },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("Hermiticity defect {defect:e} exceeds tolerance {tol:e}")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("idempotence defect {defect:e} exceeds tolerance {tol:e}")]
    NotIdempotent { defect: f64, tol: f64 },
    #[error("trace {trace} is not a positive integer rank within {tol:e}")]
    BadRank { trace: f64, tol: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension {dim} outside supported range {min}..={max}")]
    UnsupportedDimension { dim: usize, min: usize, max: usize },
    #[error("projectors {i} and {j} are not orthogonal: ‖E_i E_j‖ = {defect:e}")]
    NotOrthogonalPair { i: usize, j: usize, defect: f64 },
    #[error("projectors do not sum to the identity: defect {defect:e}")]
    Incomplete { defect: f64 },
    #[error("index {index} out of range for {len} outcomes")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("coarse-graining indices must differ, got {index} twice")]
    EqualIndices { index: usize },
    #[error("ranks sum to {sum} but the dimension is {dim}")]
    RankSumMismatch { sum: usize, dim: usize },
    #[error("input vectors are linearly dependent (residual {residual:e} below {tol:e})")]
    DependentVectors { residual: f64, tol: f64 },
    #[error("vectors are not orthogonal: |⟨u,v⟩| = {overlap:e}")]
    VectorsNotOrthogonal { overlap: f64 },
}

pub type HilbertResult<T> = Result<T, HilbertError>;

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// A column vector in the d-dimensional complex Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct HVector(CVector);

impl HVector {
    pub fn new(components: Vec<Complex64>) -> Self {
        HVector(DVector::from_vec(components))
    }

    pub fn from_vector(v: CVector) -> Self {
        HVector(v)
    }

    pub fn from_real(components: &[f64]) -> Self {
        HVector(DVector::from_iterator(
            components.len(),
            components.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    /// The k-th standard basis vector of dimension d.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = CVector::zeros(d);
        v[k] = Complex64::new(1.0, 0.0);
        HVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> HilbertResult<HVector> {
        let n = self.norm();
        if n == 0.0 {
            return Err(HilbertError::ZeroVector);
        }
        Ok(HVector(&self.0 / Complex64::new(n, 0.0)))
    }

    /// Inner product ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &HVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    pub fn scaled(&self, s: Complex64) -> HVector {
        HVector(&self.0 * s)
    }

    pub fn add(&self, other: &HVector) -> HVector {
        HVector(&self.0 + &other.0)
    }

    pub fn as_vector(&self) -> &CVector {
        &self.0
    }

    /// A Haar-random unit vector (normalized complex Gaussian).
    pub fn random_unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HVector {
        loop {
            let v = CVector::from_iterator(d, (0..d).map(|_| standard_complex(rng)));
            let n = v.norm();
            if n > 1e-6 {
                return HVector(v / Complex64::new(n, 0.0));
            }
        }
    }
}

fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / Complex64::new(std::f64::consts::SQRT_2, 0.0)
}

// ---------------------------------------------------------------------------
// Projectors
// ---------------------------------------------------------------------------

/// A Hermitian idempotent matrix labeling a measurement outcome.
///
/// The rank is stored exactly so coarse graining can track it with integer
/// arithmetic.
#[derive(Clone, Debug)]
pub struct Projector {
    matrix: CMatrix,
    rank: usize,
}

impl Projector {
    /// Validates Hermiticity, idempotence and an integer trace before
    /// accepting the matrix.
    pub fn from_matrix(matrix: CMatrix, tol: f64) -> HilbertResult<Projector> {
        if matrix.nrows() != matrix.ncols() {
            return Err(HilbertError::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let herm_defect = (&matrix - matrix.adjoint()).norm();
        if herm_defect > tol {
            return Err(HilbertError::NotHermitian {
                defect: herm_defect,
                tol,
            });
        }
        let idem_defect = (&matrix * &matrix - &matrix).norm();
        if idem_defect > tol {
            return Err(HilbertError::NotIdempotent {
                defect: idem_defect,
                tol,
            });
        }
        let trace = matrix.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() > tol || rank < 1.0 || rank > matrix.nrows() as f64 {
            return Err(HilbertError::BadRank { trace, tol });
        }
        Ok(Projector {
            matrix,
            rank: rank as usize,
        })
    }

    pub fn identity(d: usize) -> Projector {
        Projector {
            matrix: CMatrix::identity(d, d),
            rank: d,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn frobenius_distance(&self, other: &Projector) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    pub fn approx_eq(&self, other: &Projector, tol: f64) -> bool {
        self.dim() == other.dim() && self.frobenius_distance(other) <= tol
    }

    /// Orthogonal sum E_i + E_j; errors unless ‖E_i E_j‖ <= tol.
    pub fn try_add(&self, other: &Projector, tol: f64) -> HilbertResult<Projector> {
        if self.dim() != other.dim() {
            return Err(HilbertError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let overlap = (&self.matrix * &other.matrix).norm();
        if overlap > tol {
            return Err(HilbertError::NotOrthogonalPair {
                i: 0,
                j: 1,
                defect: overlap,
            });
        }
        Ok(Projector {
            matrix: &self.matrix + &other.matrix,
            rank: self.rank + other.rank,
        })
    }

    /// True when this projector acts as the identity on `other`'s range,
    /// i.e. ‖E P − P‖ <= tol. Used to test whether a coarse-grained outcome
    /// absorbs a finer one.
    pub fn absorbs(&self, other: &Projector, tol: f64) -> bool {
        (&self.matrix * &other.matrix - &other.matrix).norm() <= tol
    }

    pub fn apply(&self, v: &HVector) -> HVector {
        HVector(&self.matrix * v.as_vector())
    }
}

/// Rank-1 projector φφ† from a unit vector.
pub fn projector_from_vector(phi: &HVector) -> HilbertResult<Projector> {
    if !phi.is_unit(DEFAULT_TOL) {
        return Err(HilbertError::NotNormalized {
            norm: phi.norm(),
            tol: DEFAULT_TOL,
        });
    }
    let v = phi.as_vector();
    let matrix = v * v.adjoint();
    Ok(Projector { matrix, rank: 1 })
}

// ---------------------------------------------------------------------------
// Measurement tuples
// ---------------------------------------------------------------------------

/// An ordered complete tuple of mutually orthogonal projectors: a projective
/// measurement with one entry per outcome.
#[derive(Clone, Debug)]
pub struct MeasurementTuple {
    projectors: Vec<Projector>,
    dim: usize,
}

impl MeasurementTuple {
    pub fn new(projectors: Vec<Projector>, tol: f64) -> HilbertResult<MeasurementTuple> {
        if projectors.is_empty() {
            return Err(HilbertError::Incomplete { defect: f64::NAN });
        }
        let dim = projectors[0].dim();
        match is_complete_tuple(&projectors, tol)? {
            CompletenessCheck::Complete => Ok(MeasurementTuple { projectors, dim }),
            CompletenessCheck::NotOrthogonal { i, j, defect } => {
                Err(HilbertError::NotOrthogonalPair { i, j, defect })
            }
            CompletenessCheck::SumNotIdentity { defect } => {
                Err(HilbertError::Incomplete { defect })
            }
        }
    }

    pub fn outcomes(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize) -> &Projector {
        &self.projectors[k]
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Projector> {
        self.projectors.iter()
    }

    pub fn rank_pattern(&self) -> Vec<usize> {
        self.projectors.iter().map(|p| p.rank()).collect()
    }

    /// Position of `e` in the tuple, compared within `tol` in Frobenius norm.
    pub fn position_of(&self, e: &Projector, tol: f64) -> Option<usize> {
        self.projectors.iter().position(|p| p.approx_eq(e, tol))
    }
}

/// Detailed outcome of the completeness test.
#[derive(Clone, Copy, Debug)]
pub enum CompletenessCheck {
    Complete,
    NotOrthogonal { i: usize, j: usize, defect: f64 },
    SumNotIdentity { defect: f64 },
}

impl CompletenessCheck {
    pub fn is_complete(&self) -> bool {
        matches!(self, CompletenessCheck::Complete)
    }
}

/// Checks that the projectors are pairwise orthogonal and sum to the
/// identity, within `tol`. Errors on mismatched dimensions.
pub fn is_complete_tuple(projectors: &[Projector], tol: f64) -> HilbertResult<CompletenessCheck> {
    let dim = projectors
        .first()
        .map(Projector::dim)
        .ok_or(HilbertError::Incomplete { defect: f64::NAN })?;
    for p in projectors {
        if p.dim() != dim {
            return Err(HilbertError::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
    }
    for i in 0..projectors.len() {
        for j in (i + 1)..projectors.len() {
            let defect = (projectors[i].matrix() * projectors[j].matrix()).norm();
            if defect > tol {
                return Ok(CompletenessCheck::NotOrthogonal { i, j, defect });
            }
        }
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for p in projectors {
        sum += p.matrix();
    }
    let defect = (sum - CMatrix::identity(dim, dim)).norm();
    if defect > tol {
        return Ok(CompletenessCheck::SumNotIdentity { defect });
    }
    Ok(CompletenessCheck::Complete)
}

/// Merges outcomes `i` and `j` into the single outcome E_i + E_j, placed at
/// min(i, j). Rank bookkeeping is exact integer arithmetic.
pub fn coarse_grain(m: &MeasurementTuple, i: usize, j: usize) -> HilbertResult<MeasurementTuple> {
    let len = m.outcomes();
    if i >= len {
        return Err(HilbertError::IndexOutOfRange { index: i, len });
    }
    if j >= len {
        return Err(HilbertError::IndexOutOfRange { index: j, len });
    }
    if i == j {
        return Err(HilbertError::EqualIndices { index: i });
    }
    let (lo, hi) = (i.min(j), i.max(j));
    let merged = m.get(lo).try_add(m.get(hi), DEFAULT_TOL)?;
    let mut projectors = Vec::with_capacity(len - 1);
    for (k, p) in m.projectors.iter().enumerate() {
        if k == lo {
            projectors.push(merged.clone());
        } else if k != hi {
            projectors.push(p.clone());
        }
    }
    MeasurementTuple::new(projectors, DEFAULT_TOL)
}

// ---------------------------------------------------------------------------
// Random sampling
// ---------------------------------------------------------------------------

/// Haar-random d x d unitary: QR of a complex Ginibre matrix with the phase
/// convention that makes R's diagonal real positive.
pub fn haar_random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    assert!(d >= 1, "dimension must be at least 1");
    let g = CMatrix::from_iterator(d, d, (0..d * d).map(|_| standard_complex(rng)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            rkk / Complex64::new(rkk.norm(), 0.0)
        };
        for row in 0..d {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// A Haar-random complete tuple with the given rank pattern, built by
/// partitioning the columns of a Haar unitary.
pub fn random_complete_tuple<R: Rng + ?Sized>(
    d: usize,
    ranks: &[usize],
    rng: &mut R,
) -> HilbertResult<MeasurementTuple> {
    if !(1..=MAX_DIMENSION).contains(&d) {
        return Err(HilbertError::UnsupportedDimension {
            dim: d,
            min: 1,
            max: MAX_DIMENSION,
        });
    }
    let sum: usize = ranks.iter().sum();
    if sum != d || ranks.contains(&0) {
        return Err(HilbertError::RankSumMismatch { sum, dim: d });
    }
    let u = haar_random_unitary(d, rng);
    let mut projectors = Vec::with_capacity(ranks.len());
    let mut col = 0;
    for &r in ranks {
        let block = u.columns(col, r);
        let matrix = block * block.adjoint();
        projectors.push(Projector::from_matrix(matrix, DEFAULT_TOL)?);
        col += r;
    }
    MeasurementTuple::new(projectors, DEFAULT_TOL)
}

/// A Haar-random pair of orthogonal unit vectors: the second vector is a
/// random unit vector in the orthogonal complement of the first.
pub fn random_orthogonal_pair<R: Rng + ?Sized>(d: usize, rng: &mut R) -> (HVector, HVector) {
    assert!(d >= 2, "orthogonal pairs need dimension >= 2");
    let phi1 = HVector::random_unit(d, rng);
    loop {
        let raw = HVector::random_unit(d, rng);
        let overlap = phi1.inner(&raw);
        let projected = raw.add(&phi1.scaled(-overlap));
        let n = projected.norm();
        if n > 1e-6 {
            return (phi1, projected.scaled(Complex64::new(1.0 / n, 0.0)));
        }
    }
}

/// Splits a projector into rank(E) mutually orthogonal rank-1 projectors.
///
/// Eigendecomposition with the eigenvalue threshold 0.5: projector spectra
/// are {0, 1}, so the threshold is maximally robust to rounding.
pub fn decompose_rank1(e: &Projector) -> Vec<Projector> {
    let eig = e.matrix().clone().symmetric_eigen();
    let mut parts = Vec::with_capacity(e.rank());
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.5 {
            let col = eig.eigenvectors.column(k).into_owned();
            let matrix = &col * col.adjoint();
            parts.push(Projector { matrix, rank: 1 });
        }
    }
    debug_assert_eq!(parts.len(), e.rank());
    parts
}

/// Orthonormal basis of the orthogonal complement of the span of `vectors`.
///
/// Modified Gram-Schmidt with a re-orthogonalization pass; errors if the
/// inputs are linearly dependent beyond `tol`.
pub fn orthogonal_complement(vectors: &[HVector], tol: f64) -> HilbertResult<Vec<HVector>> {
    let d = vectors
        .first()
        .map(HVector::dim)
        .expect("orthogonal_complement requires at least one input vector");
    for v in vectors {
        if v.dim() != d {
            return Err(HilbertError::DimensionMismatch {
                expected: d,
                got: v.dim(),
            });
        }
    }
    let mut basis: Vec<CVector> = Vec::with_capacity(d);
    for v in vectors {
        let w = project_out(v.as_vector().clone(), &basis);
        let n = w.norm();
        if n < tol {
            return Err(HilbertError::DependentVectors { residual: n, tol });
        }
        basis.push(w / Complex64::new(n, 0.0));
    }
    let span = basis.len();
    let mut complement = Vec::with_capacity(d - span);
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let candidate = HVector::basis(d, k);
        let w = project_out(candidate.as_vector().clone(), &basis);
        let n = w.norm();
        if n > 1e-6 {
            let unit = w / Complex64::new(n, 0.0);
            complement.push(HVector(unit.clone()));
            basis.push(unit);
        }
    }
    debug_assert_eq!(complement.len(), d - span);
    Ok(complement)
}

fn project_out(mut w: CVector, basis: &[CVector]) -> CVector {
    // Two MGS passes keep the Gram residuals near machine precision.
    for _ in 0..2 {
        for b in basis {
            let coeff = b.dotc(&w);
            w -= b * coeff;
        }
    }
    w
}

// ---------------------------------------------------------------------------
// Real 3-vector geometry
// ---------------------------------------------------------------------------

/// Three pairwise-orthogonal real 3-vectors, the geometric input of the
/// third-derivative contraction identities.
#[derive(Clone, Copy, Debug)]
pub struct RealTriple {
    pub u: [f64; 3],
    pub v: [f64; 3],
    pub w: [f64; 3],
}

impl RealTriple {
    pub fn new(u: [f64; 3], v: [f64; 3], w: [f64; 3], tol: f64) -> HilbertResult<RealTriple> {
        for (a, b) in [(&u, &v), (&u, &w), (&v, &w)] {
            let overlap = dot3(a, b).abs();
            if overlap > tol {
                return Err(HilbertError::VectorsNotOrthogonal { overlap });
            }
        }
        Ok(RealTriple { u, v, w })
    }
}

/// tr(A B) without forming the product matrix.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

// ---------------------------------------------------------------------------
