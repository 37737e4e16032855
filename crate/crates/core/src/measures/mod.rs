//! Probability measures over projectors and frame functions over vectors.
//!
//! A measure assigns a real value to every projector in its declared domain.
//! The Born measure tr(Eρ) is the quantum case; affine measures
//! tr(ηE) + K_r are what the fitting machinery in [`crate::gleason`]
//! recovers; polynomial measures in tr(Eρ) provide the non-additive
//! counterexamples. Restricting a measure to rank-1 projectors and viewing
//! it as a function of unit vectors gives a frame function, which this
//! module extends to the whole vector space with degree-2 homogeneity.

pub mod dsl;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::hilbert::{
    projector_from_vector, trace_product, CMatrix, HVector, HilbertError, Projector,
};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("dimension mismatch: measure is on dimension {expected}, projector on {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("projector is outside the measure's declared domain")]
    OutsideDomain,
    #[error("rank {rank} does not belong to a declared rank class")]
    UndeclaredRankClass { rank: usize },
    #[error("projectors are not orthogonal: ‖E1 E2‖ = {defect:e}")]
    NonOrthogonalPair { defect: f64 },
    #[error("frame function is undefined at the zero vector")]
    UndefinedAtZero,
    #[error("matrix is not Hermitian: defect {defect:e}")]
    NotHermitian { defect: f64 },
    #[error("trace {trace} is not 1 within {tol:e}")]
    TraceNotOne { trace: f64, tol: f64 },
    #[error("not a state: minimum eigenvalue {min_eigenvalue} below -{tol:e}")]
    NotAState { min_eigenvalue: f64, tol: f64 },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Dsl(#[from] dsl::DslError),
}

pub type MeasureResult<T> = Result<T, MeasureError>;

/// An evaluable map from projectors to reals, with an optional domain
/// restriction. Evaluation outside the domain is an error, not zero: the
/// fitting theorems are local and a partial measure must stay partial.
pub trait Measure: Send + Sync {
    fn dim(&self) -> usize;

    /// Domain membership. Defaults to the whole projector lattice.
    fn contains(&self, e: &Projector) -> bool {
        let _ = e;
        true
    }

    fn value(&self, e: &Projector) -> MeasureResult<f64>;

    fn check_dim(&self, e: &Projector) -> MeasureResult<()> {
        if e.dim() != self.dim() {
            return Err(MeasureError::DimensionMismatch {
                expected: self.dim(),
                got: e.dim(),
            });
        }
        Ok(())
    }
}

impl<M: Measure + ?Sized> Measure for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, e: &Projector) -> bool {
        (**self).contains(e)
    }
    fn value(&self, e: &Projector) -> MeasureResult<f64> {
        (**self).value(e)
    }
}

impl<M: Measure + ?Sized> Measure for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn contains(&self, e: &Projector) -> bool {
        (**self).contains(e)
    }
    fn value(&self, e: &Projector) -> MeasureResult<f64> {
        (**self).value(e)
    }
}

// ---------------------------------------------------------------------------
// Density operators and the Born measure
// ---------------------------------------------------------------------------

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    rho: CMatrix,
}

pub const DENSITY_TRACE_TOL: f64 = 1e-12;
pub const DENSITY_EIG_TOL: f64 = 1e-10;

impl DensityOperator {
    pub fn new(rho: CMatrix) -> MeasureResult<DensityOperator> {
        DensityOperator::with_tolerance(rho, DENSITY_TRACE_TOL, DENSITY_EIG_TOL)
    }

    /// Like [`DensityOperator::new`] with caller-chosen trace and
    /// eigenvalue tolerances (the reconstruction path is looser than the
    /// constructor default).
    pub fn with_tolerance(
        rho: CMatrix,
        trace_tol: f64,
        eig_tol: f64,
    ) -> MeasureResult<DensityOperator> {
        let herm = (&rho - rho.adjoint()).norm();
        if herm > trace_tol.max(1e-12) {
            return Err(MeasureError::NotHermitian { defect: herm });
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > trace_tol {
            return Err(MeasureError::TraceNotOne {
                trace,
                tol: trace_tol,
            });
        }
        let min_eigenvalue = min_hermitian_eigenvalue(&rho);
        if min_eigenvalue < -eig_tol {
            return Err(MeasureError::NotAState {
                min_eigenvalue,
                tol: eig_tol,
            });
        }
        Ok(DensityOperator { rho })
    }

    pub fn pure(psi: &HVector) -> MeasureResult<DensityOperator> {
        let p = projector_from_vector(psi)?;
        Ok(DensityOperator {
            rho: p.matrix().clone(),
        })
    }

    pub fn maximally_mixed(d: usize) -> DensityOperator {
        DensityOperator {
            rho: CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0),
        }
    }

    /// Random full-rank state G G† / tr(G G†) with G complex Ginibre.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityOperator {
        let g = crate::hilbert::haar_random_unitary(d, rng);
        // Mix Haar eigenvectors with a random simplex spectrum.
        let mut weights: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let mut rho = CMatrix::zeros(d, d);
        for (k, w) in weights.iter().enumerate() {
            let col = g.column(k);
            rho += col * col.adjoint() * Complex64::new(*w, 0.0);
        }
        DensityOperator { rho }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.rho)
    }
}

pub(crate) fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// The Born rule tr(Eρ).
pub fn born_measure(rho: &DensityOperator, e: &Projector) -> MeasureResult<f64> {
    if rho.dim() != e.dim() {
        return Err(MeasureError::DimensionMismatch {
            expected: rho.dim(),
            got: e.dim(),
        });
    }
    Ok(trace_product(e.matrix(), rho.matrix()).re)
}

/// The Born measure as an evaluator.
#[derive(Clone, Debug)]
pub struct BornMeasure {
    rho: DensityOperator,
}

impl BornMeasure {
    pub fn new(rho: DensityOperator) -> BornMeasure {
        BornMeasure { rho }
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }
}

impl Measure for BornMeasure {
    fn dim(&self) -> usize {
        self.rho.dim()
    }

    fn value(&self, e: &Projector) -> MeasureResult<f64> {
        born_measure(&self.rho, e)
    }
}

// ---------------------------------------------------------------------------
// Affine measures
// ---------------------------------------------------------------------------

/// μ(E) = tr(ηE) + K_r with a constant per declared rank class.
///
/// The pair (η, K) is gauge-redundant: (η + λ𝟙, K_r − λr) evaluates
/// identically. The canonical representation stores a traceless η, so
/// construction normalizes the gauge and fitted outputs are comparable.
#[derive(Clone, Debug)]
pub struct AffineMeasure {
    eta: CMatrix,
    constants: BTreeMap<usize, f64>,
}

impl AffineMeasure {
    pub fn new(eta: CMatrix, constants: BTreeMap<usize, f64>) -> MeasureResult<AffineMeasure> {
        let herm = (&eta - eta.adjoint()).norm();
        if herm > 1e-12 * (1.0 + eta.norm()) {
            return Err(MeasureError::NotHermitian { defect: herm });
        }
        let d = eta.nrows();
        let lambda = eta.trace().re / d as f64;
        let traceless = &eta - CMatrix::identity(d, d) * Complex64::new(lambda, 0.0);
        let constants = constants
            .into_iter()
            .map(|(rank, k)| (rank, k + lambda * rank as f64))
            .collect();
        Ok(AffineMeasure {
            eta: traceless,
            constants,
        })
    }

    /// Applies the gauge shift (η, K_r) → (η + λ𝟙, K_r − λr) and
    /// re-normalizes; by gauge invariance the result equals `self`.
    pub fn shifted(&self, lambda: f64) -> AffineMeasure {
        let d = self.eta.nrows();
        let eta = &self.eta + CMatrix::identity(d, d) * Complex64::new(lambda, 0.0);
        let constants = self
            .constants
            .iter()
            .map(|(&rank, &k)| (rank, k - lambda * rank as f64))
            .collect();
        AffineMeasure::new(eta, constants).expect("gauge shift preserves Hermiticity")
    }

    pub fn eta(&self) -> &CMatrix {
        &self.eta
    }

    pub fn constants(&self) -> &BTreeMap<usize, f64> {
        &self.constants
    }

    pub fn constant(&self, rank: usize) -> Option<f64> {
        self.constants.get(&rank).copied()
    }
}

impl Measure for AffineMeasure {
    fn dim(&self) -> usize {
        self.eta.nrows()
    }

    fn contains(&self, e: &Projector) -> bool {
        self.constants.contains_key(&e.rank())
    }

    fn value(&self, e: &Projector) -> MeasureResult<f64> {
        affine_eval(self, e)
    }
}

/// tr(ηE) + K for E's rank class; errors on undeclared classes.
pub fn affine_eval(a: &AffineMeasure, e: &Projector) -> MeasureResult<f64> {
    a.check_dim(e)?;
    let k = a
        .constant(e.rank())
        .ok_or(MeasureError::UndeclaredRankClass { rank: e.rank() })?;
    Ok(trace_product(a.eta(), e.matrix()).re + k)
}

// ---------------------------------------------------------------------------
// Polynomial measures (the non-additive counterexamples)
// ---------------------------------------------------------------------------

/// μ(E) = Σ_k c_k · tr(Eρ)^k. Quadratic and higher terms break additivity,
/// which is exactly what the verifiers are expected to flag.
#[derive(Clone, Debug)]
pub struct PolynomialMeasure {
    rho: DensityOperator,
    coeffs: Vec<f64>,
}

impl PolynomialMeasure {
    pub fn new(rho: DensityOperator, coeffs: Vec<f64>) -> PolynomialMeasure {
        PolynomialMeasure { rho, coeffs }
    }

    /// μ(E) = tr(Eρ)².
    pub fn quadratic(rho: DensityOperator) -> PolynomialMeasure {
        PolynomialMeasure::new(rho, vec![0.0, 0.0, 1.0])
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

impl Measure for PolynomialMeasure {
    fn dim(&self) -> usize {
        self.rho.dim()
    }

    fn value(&self, e: &Projector) -> MeasureResult<f64> {
        self.check_dim(e)?;
        let t = trace_product(e.matrix(), self.rho.matrix()).re;
        // Horner evaluation in tr(Eρ).
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Closure-backed measures for synthetic constructions
// ---------------------------------------------------------------------------

/// A measure defined by a closure, with an optional domain predicate.
/// The test suites use this for engineered counterexamples.
pub struct CustomMeasure {
    dim: usize,
    eval: Box<dyn Fn(&Projector) -> f64 + Send + Sync>,
    domain: Box<dyn Fn(&Projector) -> bool + Send + Sync>,
}

impl CustomMeasure {
    pub fn new(
        dim: usize,
        eval: impl Fn(&Projector) -> f64 + Send + Sync + 'static,
    ) -> CustomMeasure {
        CustomMeasure {
            dim,
            eval: Box::new(eval),
            domain: Box::new(|_| true),
        }
    }

    pub fn with_domain(
        mut self,
        domain: impl Fn(&Projector) -> bool + Send + Sync + 'static,
    ) -> CustomMeasure {
        self.domain = Box::new(domain);
        self
    }
}

impl Measure for CustomMeasure {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, e: &Projector) -> bool {
        (self.domain)(e)
    }

    fn value(&self, e: &Projector) -> MeasureResult<f64> {
        self.check_dim(e)?;
        if !self.contains(e) {
            return Err(MeasureError::OutsideDomain);
        }
        Ok((self.eval)(e))
    }
}

// ---------------------------------------------------------------------------
// Additivity
// ---------------------------------------------------------------------------

/// μ(E1) + μ(E2) − μ(E1 + E2) for an orthogonal pair. Zero iff the measure
/// is additive on the pair.
pub fn additivity_residual(
    mu: &dyn Measure,
    e1: &Projector,
    e2: &Projector,
    tol: f64,
) -> MeasureResult<f64> {
    let overlap = (e1.matrix() * e2.matrix()).norm();
    if overlap > tol {
        return Err(MeasureError::NonOrthogonalPair { defect: overlap });
    }
    let sum = e1.try_add(e2, tol)?;
    Ok(mu.value(e1)? + mu.value(e2)? - mu.value(&sum)?)
}

// ---------------------------------------------------------------------------
// Frame functions with radial extension
// ---------------------------------------------------------------------------

type UnitSphereFn = Arc<dyn Fn(&HVector) -> MeasureResult<f64> + Send + Sync>;

/// A frame function f(φ) = μ(φφ†) made evaluable on the whole vector space
/// by the degree-2 homogeneous extension f(φ/|φ|)·|φ|².
pub struct FrameFunction {
    dim: usize,
    unit_fn: UnitSphereFn,
}

impl Clone for FrameFunction {
    fn clone(&self) -> Self {
        FrameFunction {
            dim: self.dim,
            unit_fn: Arc::clone(&self.unit_fn),
        }
    }
}

impl FrameFunction {
    /// Wraps a function defined on unit vectors.
    pub fn from_unit_fn(
        dim: usize,
        f: impl Fn(&HVector) -> f64 + Send + Sync + 'static,
    ) -> FrameFunction {
        FrameFunction {
            dim,
            unit_fn: Arc::new(move |phi| Ok(f(phi))),
        }
    }

    /// The frame function of a measure: f(φ) = μ(φφ†) on unit vectors.
    pub fn from_measure<M: Measure + 'static>(measure: M) -> FrameFunction {
        let dim = measure.dim();
        FrameFunction {
            dim,
            unit_fn: Arc::new(move |phi| {
                let p = projector_from_vector(phi)?;
                measure.value(&p)
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Evaluates the radial extension at any nonzero vector.
    pub fn eval(&self, phi: &HVector) -> MeasureResult<f64> {
        let n = phi.norm();
        if n == 0.0 {
            return Err(MeasureError::UndefinedAtZero);
        }
        let unit = phi.scaled(Complex64::new(1.0 / n, 0.0));
        Ok((self.unit_fn)(&unit)? * n * n)
    }
}

/// Degree-2 homogeneous extension of a unit-sphere function; the returned
/// frame function agrees with `f` on the unit sphere.
pub fn radial_extension(
    dim: usize,
    f: impl Fn(&HVector) -> f64 + Send + Sync + 'static,
) -> FrameFunction {
    FrameFunction::from_unit_fn(dim, f)
}

/// Parses a measure definition in the text DSL and builds the evaluator.
pub fn parse_measure_spec(text: &str) -> MeasureResult<dsl::BuiltMeasure> {
    let ast = dsl::parse(text)?;
    dsl::build(&ast)
}

// ---------------------------------------------------------------------------
