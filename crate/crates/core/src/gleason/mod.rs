//! Numerical verification of the differential identities of additive frame
//! functions, and least-squares recovery of the affine form tr(ηE) + K.
//!
//! The chain of checks mirrors the structure of the underlying theorems:
//!
//! 1. [`verify_frame_identities`] — on random real 3-D sections, an additive frame
//!    function must satisfy the plane-rotation identity and have vanishing
//!    third derivatives (both estimated by central differences).
//! 2. [`fit_affine`] — any measure passing those checks on a connected
//!    patch is affine there; the fitter recovers a traceless η and one
//!    constant per class by rank-revealing least squares.
//! 3. [`verify_patch_consistency`] — constants fitted on overlapping
//!    patches must agree.
//! 4. [`reconstruct_density`] — a globally defined non-negative normalized
//!    measure yields ρ = η + K·𝟙 on the rank-1 class, recovering the
//!    density operator.
//!
//! All finite-difference verdicts assume pointwise smoothness of the
//! measure; measures that are only distribution-differentiable are outside
//! what the estimators can test, and every report carries a note saying so.

pub mod basis;
pub mod fd;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::RngCore;
use serde_json::json;
use thiserror::Error;

use crate::hilbert::{
    projector_from_vector, trace_product, CMatrix, HVector, HilbertError, Projector,
};
use crate::measures::{AffineMeasure, DensityOperator, Measure, MeasureError};
use crate::report::CheckReport;

pub use basis::gell_mann_basis;
pub use fd::{
    central_diff, radial_defect, rotation_identity_residual, third_derivative,
    third_derivative_tensor, RealSection, SectionFn, ThirdDerivTensor,
};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Tolerance coefficient: identities are accepted when the residual is
/// below `FD_TOLERANCE_COEFF · h²`, the truncation scale of the stencils
/// for unit-scale functions.
pub const FD_TOLERANCE_COEFF: f64 = 50.0;

/// Residual threshold τ(h) for the finite-difference identity checks.
pub fn fd_tolerance(h: f64) -> f64 {
    FD_TOLERANCE_COEFF * h * h
}

/// Relative singular-value cutoff for rank decisions in the fitter.
const RANK_CUTOFF: f64 = 1e-10;

/// Per-class spread below which samples are treated as exactly constant.
const CONSTANT_EPS: f64 = 1e-12;

const SMOOTHNESS_NOTE: &str =
    "finite-difference verdict assumes pointwise smoothness; measures that are only \
     distribution-differentiable are not testable by this estimator";

#[derive(Debug, Error)]
pub enum GleasonError {
    #[error("vectors are not orthogonal: |⟨v,w⟩| = {overlap:e}")]
    NotOrthogonal { overlap: f64 },
    #[error("section basis is not orthonormal: defect {defect:e}")]
    SectionNotOrthonormal { defect: f64 },
    #[error("dimension {dim} too small: the verifiers require dimension >= 3")]
    DimensionTooSmall { dim: usize },
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error(
        "design matrix is rank-deficient: the affine model is underdetermined \
         with a null space of dimension {null_dimension}"
    )]
    Underdetermined { null_dimension: usize },
    #[error("least-squares solve failed: {0}")]
    SolveFailed(String),
    #[error("class {class} was not part of the fit")]
    UnknownClass { class: usize },
    #[error("class {class} mixes projector ranks; cannot key constants by rank")]
    MixedRankClass { class: usize },
    #[error("two classes share rank {rank} with different constants")]
    DuplicateRankClass { rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

pub type GleasonResult<T> = Result<T, GleasonError>;

// ---------------------------------------------------------------------------
// Frame-function identity verification
// ---------------------------------------------------------------------------

/// Verdict of the finite-difference identity checks on sampled sections.
#[derive(Clone, Copy, Debug)]
pub struct FrameIdentityReport {
    pub max_rotation_residual: f64,
    pub max_third_derivative: f64,
    pub step: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub pass: bool,
}

impl FrameIdentityReport {
    pub fn to_check_report(&self) -> CheckReport {
        CheckReport::with_verdict(
            "frame_function_identities",
            json!({
                "h": self.step,
                "max_rotation_residual": self.max_rotation_residual,
                "max_third_derivative": self.max_third_derivative,
            }),
            self.max_rotation_residual.max(self.max_third_derivative),
            self.tolerance,
            self.pass,
            self.samples,
        )
        .note(SMOOTHNESS_NOTE)
    }
}

/// Runs the rotation-generator identity and the third-derivative check on
/// sections through `n_samples` sampled orthogonal pairs.
///
/// The sampler is the operational form of the open set the hypotheses hold
/// on: every pair it yields must lie in that set (that is the caller's
/// contract; violations are what the verdict detects).
pub fn verify_frame_identities(
    f: &crate::measures::FrameFunction,
    sampler: &mut dyn FnMut() -> (HVector, HVector),
    n_samples: usize,
    h: f64,
) -> GleasonResult<FrameIdentityReport> {
    if n_samples == 0 {
        return Err(GleasonError::EmptySampleSet);
    }
    let e1 = [1.0, 0.0, 0.0];
    let e2 = [0.0, 1.0, 0.0];
    let mut max_rot = 0.0f64;
    let mut max_third = 0.0f64;
    for _ in 0..n_samples {
        let (phi1, phi2) = sampler();
        let section = RealSection::through_pair(&phi1, &phi2)?;
        let g = section.restrict(f);
        let rot = rotation_identity_residual(&g, &e1, &e2, h)?;
        max_rot = max_rot.max(rot.abs());
        for base in [e1, e2] {
            let tensor = third_derivative_tensor(&g, &base, h)?;
            max_third = max_third.max(tensor.max_abs());
        }
    }
    let tolerance = fd_tolerance(h);
    Ok(FrameIdentityReport {
        max_rotation_residual: max_rot,
        max_third_derivative: max_third,
        step: h,
        tolerance,
        samples: n_samples,
        pass: max_rot <= tolerance && max_third <= tolerance,
    })
}

// ---------------------------------------------------------------------------
// Affine fitting
// ---------------------------------------------------------------------------

/// One observation for the fitter: a projector, the measured value, and the
/// class whose constant the observation contributes to. For plain measures
/// the class is the projector rank; the ontology checks use tuple positions
/// instead, which is the per-position form of the constants.
#[derive(Clone, Debug)]
pub struct FitSample {
    pub projector: Projector,
    pub value: f64,
    pub class: usize,
}

/// Least-squares solution: traceless Hermitian η, one constant per class,
/// and the rms residual of the fit.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub eta: CMatrix,
    pub constants: BTreeMap<usize, f64>,
    pub class_ranks: BTreeMap<usize, BTreeSet<usize>>,
    pub rms_residual: f64,
    pub samples: usize,
}

impl FitResult {
    pub fn dim(&self) -> usize {
        self.eta.nrows()
    }

    /// Evaluates the fitted affine form on a projector of a known class.
    pub fn eval(&self, e: &Projector, class: usize) -> GleasonResult<f64> {
        let k = self
            .constants
            .get(&class)
            .ok_or(GleasonError::UnknownClass { class })?;
        Ok(trace_product(&self.eta, e.matrix()).re + k)
    }

    /// Converts to a rank-keyed measure; requires every class to carry a
    /// single distinct rank.
    pub fn to_affine_measure(&self) -> GleasonResult<AffineMeasure> {
        let mut constants = BTreeMap::new();
        for (&class, k) in &self.constants {
            let ranks = &self.class_ranks[&class];
            if ranks.len() != 1 {
                return Err(GleasonError::MixedRankClass { class });
            }
            let rank = *ranks.iter().next().unwrap();
            if constants.insert(rank, *k).is_some() {
                return Err(GleasonError::DuplicateRankClass { rank });
            }
        }
        Ok(AffineMeasure::new(self.eta.clone(), constants)?)
    }

    pub fn to_check_report(&self, tolerance: f64) -> CheckReport {
        CheckReport::new(
            "affine_fit",
            json!({
                "classes": self.constants.keys().collect::<Vec<_>>(),
                "constants": self.constants.values().collect::<Vec<_>>(),
            }),
            self.rms_residual,
            tolerance,
            self.samples,
        )
    }
}

/// Fits tr(ηE) + K_r with one constant per projector rank.
pub fn fit_affine(samples: &[(Projector, f64)]) -> GleasonResult<FitResult> {
    let classed: Vec<FitSample> = samples
        .iter()
        .map(|(p, v)| FitSample {
            class: p.rank(),
            projector: p.clone(),
            value: *v,
        })
        .collect();
    fit_affine_classed(&classed)
}

/// Fits tr(ηE) + K_c with caller-chosen class labels.
///
/// Degenerate inputs that are constant within every class are accepted with
/// η = 0 (the K-only case); otherwise the design matrix over the
/// generalized Gell-Mann basis plus per-class indicators must have full
/// column rank, and a rank-deficient design is an error reporting the
/// null-space dimension.
pub fn fit_affine_classed(samples: &[FitSample]) -> GleasonResult<FitResult> {
    if samples.is_empty() {
        return Err(GleasonError::EmptySampleSet);
    }
    let d = samples[0].projector.dim();
    for s in samples {
        if s.projector.dim() != d {
            return Err(GleasonError::DimensionMismatch {
                expected: d,
                got: s.projector.dim(),
            });
        }
    }

    let mut class_ranks: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for s in samples {
        class_ranks
            .entry(s.class)
            .or_default()
            .insert(s.projector.rank());
    }
    let classes: Vec<usize> = class_ranks.keys().copied().collect();
    let needed = d * d + classes.len();
    if samples.len() < needed {
        return Err(GleasonError::InsufficientSamples {
            needed,
            got: samples.len(),
        });
    }

    // K-only shortcut: constant samples pin no direction of η, so the
    // canonical solution is η = 0 with the class constants.
    let mut spreads: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for s in samples {
        let entry = spreads
            .entry(s.class)
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        entry.0 = entry.0.min(s.value);
        entry.1 = entry.1.max(s.value);
    }
    if spreads.values().all(|(lo, hi)| hi - lo <= CONSTANT_EPS) {
        let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for s in samples {
            let e = sums.entry(s.class).or_insert((0.0, 0));
            e.0 += s.value;
            e.1 += 1;
        }
        let constants: BTreeMap<usize, f64> = sums
            .into_iter()
            .map(|(class, (sum, count))| (class, sum / count as f64))
            .collect();
        let mut sq = 0.0;
        for s in samples {
            let r = s.value - constants[&s.class];
            sq += r * r;
        }
        return Ok(FitResult {
            eta: CMatrix::zeros(d, d),
            constants,
            class_ranks,
            rms_residual: (sq / samples.len() as f64).sqrt(),
            samples: samples.len(),
        });
    }

    let basis = gell_mann_basis(d);
    let ncols = basis.len() + classes.len();
    let n = samples.len();
    let mut a = DMatrix::<f64>::zeros(n, ncols);
    let mut b = DVector::<f64>::zeros(n);
    for (row, s) in samples.iter().enumerate() {
        for (col, g) in basis.iter().enumerate() {
            a[(row, col)] = trace_product(g, s.projector.matrix()).re;
        }
        let class_col = classes.binary_search(&s.class).unwrap();
        a[(row, basis.len() + class_col)] = 1.0;
        b[row] = s.value;
    }

    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let cutoff = max_sv * RANK_CUTOFF;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank < ncols {
        return Err(GleasonError::Underdetermined {
            null_dimension: ncols - rank,
        });
    }
    let x = svd
        .solve(&b, cutoff)
        .map_err(|e| GleasonError::SolveFailed(e.to_string()))?;

    let residual = &a * &x - &b;
    let rms_residual = (residual.norm_squared() / n as f64).sqrt();

    let mut eta = CMatrix::zeros(d, d);
    for (col, g) in basis.iter().enumerate() {
        eta += g * Complex64::new(x[col], 0.0);
    }
    let mut constants = BTreeMap::new();
    for (idx, &class) in classes.iter().enumerate() {
        constants.insert(class, x[basis.len() + idx]);
    }

    Ok(FitResult {
        eta,
        constants,
        class_ranks,
        rms_residual,
        samples: n,
    })
}

// ---------------------------------------------------------------------------
// Patch consistency
// ---------------------------------------------------------------------------

/// A seeded draw from a patch of projector space.
pub type ProjectorSampler<'a> = Box<dyn FnMut(&mut dyn RngCore) -> Projector + 'a>;

/// A patch of projector space given operationally: a sampler that draws
/// from it and a membership predicate. Connectedness is the caller's
/// declaration; arbitrary open sets are not finitely representable.
pub struct PatchSpec<'a> {
    pub name: String,
    pub sampler: ProjectorSampler<'a>,
    pub membership: Box<dyn Fn(&Projector) -> bool + 'a>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapVerdict {
    /// Sampled patches do not intersect; differing constants are allowed.
    NoOverlap,
    /// Patches intersect and the constants agree within tolerance.
    OverlapConstantsAgree,
    /// Patches intersect with differing constants: hypothesis violation.
    OverlapConstantsDiffer,
}

#[derive(Clone, Debug)]
pub struct PatchPairVerdict {
    pub patch_i: usize,
    pub patch_j: usize,
    pub overlap: bool,
    pub delta_k: f64,
    pub ranks_match: bool,
    pub verdict: OverlapVerdict,
    pub consistent_with_theorem: bool,
}

#[derive(Debug)]
pub struct PatchReport {
    pub per_patch: Vec<FitResult>,
    pub joint: FitResult,
    pub pairs: Vec<PatchPairVerdict>,
    pub tolerance_k: f64,
}

impl PatchReport {
    pub fn all_consistent(&self) -> bool {
        self.pairs.iter().all(|p| p.consistent_with_theorem)
    }

    pub fn to_check_report(&self) -> CheckReport {
        let worst = self
            .pairs
            .iter()
            .filter(|p| p.overlap)
            .map(|p| p.delta_k)
            .fold(0.0f64, f64::max);
        CheckReport::with_verdict(
            "patch_constant_consistency",
            json!({
                "patches": self.per_patch.len(),
                "joint_constants": self.joint.constants.values().collect::<Vec<_>>(),
                "pairs": self.pairs.iter().map(|p| json!({
                    "i": p.patch_i,
                    "j": p.patch_j,
                    "overlap": p.overlap,
                    "delta_k": p.delta_k,
                    "verdict": format!("{:?}", p.verdict),
                })).collect::<Vec<_>>(),
            }),
            worst,
            self.tolerance_k,
            self.all_consistent(),
            self.joint.samples,
        )
    }
}

/// Fits the measure on every patch with a shared η (class = patch index)
/// and checks that patches with a sampled intersection carry equal
/// constants, which is what the theorems demand of overlapping patches.
pub fn verify_patch_consistency(
    measure: &dyn Measure,
    patches: &mut [PatchSpec],
    samples_per_patch: usize,
    tolerance_k: f64,
    rng: &mut dyn RngCore,
) -> GleasonResult<PatchReport> {
    if patches.is_empty() {
        return Err(GleasonError::EmptySampleSet);
    }
    let mut drawn: Vec<Vec<(Projector, f64)>> = Vec::with_capacity(patches.len());
    for patch in patches.iter_mut() {
        let mut batch = Vec::with_capacity(samples_per_patch);
        for _ in 0..samples_per_patch {
            let p = (patch.sampler)(rng);
            let v = measure.value(&p)?;
            batch.push((p, v));
        }
        drawn.push(batch);
    }

    let mut per_patch = Vec::with_capacity(patches.len());
    for batch in &drawn {
        per_patch.push(fit_affine(batch)?);
    }

    let classed: Vec<FitSample> = drawn
        .iter()
        .enumerate()
        .flat_map(|(idx, batch)| {
            batch.iter().map(move |(p, v)| FitSample {
                projector: p.clone(),
                value: *v,
                class: idx,
            })
        })
        .collect();
    let joint = fit_affine_classed(&classed)?;

    let mut pairs = Vec::new();
    for i in 0..patches.len() {
        for j in (i + 1)..patches.len() {
            let overlap = drawn[i].iter().any(|(p, _)| (patches[j].membership)(p))
                || drawn[j].iter().any(|(p, _)| (patches[i].membership)(p));
            let delta_k = (joint.constants[&i] - joint.constants[&j]).abs();
            let ranks_match = joint.class_ranks[&i] == joint.class_ranks[&j];
            let verdict = if !overlap {
                OverlapVerdict::NoOverlap
            } else if delta_k <= tolerance_k && ranks_match {
                OverlapVerdict::OverlapConstantsAgree
            } else {
                OverlapVerdict::OverlapConstantsDiffer
            };
            pairs.push(PatchPairVerdict {
                patch_i: i,
                patch_j: j,
                overlap,
                delta_k,
                ranks_match,
                verdict,
                consistent_with_theorem: verdict != OverlapVerdict::OverlapConstantsDiffer,
            });
        }
    }

    Ok(PatchReport {
        per_patch,
        joint,
        pairs,
        tolerance_k,
    })
}

// ---------------------------------------------------------------------------
// Density reconstruction
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct DensityReconstruction {
    pub rho: DensityOperator,
    pub fit: FitResult,
}

/// Reconstructs ρ = η + K·𝟙 from a measure sampled over Haar-random rank-1
/// projectors. The measure must be globally defined, non-negative and
/// normalized; negativity beyond 1e-8 or a trace off by more than 1e-9 is a
/// "not a state" error reporting the offending eigenvalue.
pub fn reconstruct_density(
    measure: &dyn Measure,
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> GleasonResult<DensityReconstruction> {
    let d = measure.dim();
    if d < 3 {
        return Err(GleasonError::DimensionTooSmall { dim: d });
    }
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let phi = HVector::random_unit(d, rng);
        let e = projector_from_vector(&phi)?;
        let v = measure.value(&e)?;
        samples.push((e, v));
    }
    let fit = fit_affine(&samples)?;
    let k = *fit
        .constants
        .get(&1)
        .ok_or(GleasonError::UnknownClass { class: 1 })?;
    let rho_matrix = &fit.eta + CMatrix::identity(d, d) * Complex64::new(k, 0.0);
    let rho = DensityOperator::with_tolerance(rho_matrix, 1e-9, 1e-8)?;
    Ok(DensityReconstruction { rho, fit })
}

// ---------------------------------------------------------------------------
