//! Hidden-variable models with finite contextual information.
//!
//! A model assigns each prepared system an ontic state x, compresses the
//! measurement context into a discrete index n with distribution
//! P_c(n | x, M, τ), and responds to an outcome E through μ(E | x, n). The
//! outcome probability is the convex combination
//! P(E | x, M, τ) = Σ_n μ(E | x, n) · P_c(n | x, M, τ).
//!
//! The checks in this module probe the consistency conditions such a model
//! must satisfy: response normalization and non-negativity on every
//! measurement consistent with a context index, covering of the measurement
//! manifold by the consistency sets Ω_n(x), closure of those sets under
//! coarse graining, reproduction of the Born statistics, affinity of the
//! response given the context, and causality for sequences of commuting
//! two-outcome measurements.
//!
//! Response values for (E, n) pairs outside the consistency sets are left
//! indeterminate by the model (an error, not a number); every check skips
//! such pairs rather than imputing a value.

pub mod fixtures;

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, RngCore};
use serde_json::json;
use thiserror::Error;

use crate::gleason::{fit_affine_classed, FitResult, FitSample, GleasonError};
use crate::hilbert::{coarse_grain, HVector, HilbertError, MeasurementTuple, Projector};
use crate::measures::MeasureError;
use crate::report::CheckReport;

/// Discrete context index n.
pub type ContextIndex = usize;

/// Opaque preparation-context label (the preparation analogue of the
/// measurement context; models that ignore it must accept any value).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PrepContext(pub u64);

/// Opaque residual measurement-context label τ, passed through to the
/// model untouched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MeasContext(pub u64);

/// Comparison tolerance when locating a projector inside a tuple.
pub const COMPONENT_TOL: f64 = 1e-9;

/// Default z-score threshold for the Born-reproduction verdict.
pub const DEFAULT_Z_THRESHOLD: f64 = 4.0;

/// Minimum trial count for the Monte-Carlo Born check.
pub const MIN_BORN_TRIALS: usize = 10_000;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("projector is not a component of the measurement tuple")]
    NotAComponent,
    #[error("measurement is outside the model's consistency sets (context {context:?})")]
    OutsideOmega { context: Option<ContextIndex> },
    #[error("response is indeterminate for this (projector, context) pair")]
    IndeterminateResponse,
    #[error("context distribution sums to {sum}, expected 1")]
    InvalidDistribution { sum: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("measurement has {outcomes} outcomes, need at least 3")]
    TooFewOutcomes { outcomes: usize },
    #[error("need at least {needed} trials, got {got}")]
    InsufficientTrials { needed: usize, got: usize },
    #[error("events do not commute: ‖[E_i, E_j]‖ = {defect:e}")]
    NonCommutingEvents { defect: f64 },
    #[error("scenario needs at least two events")]
    EmptyScenario,
    #[error(transparent)]
    Gleason(#[from] Box<GleasonError>),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

impl From<GleasonError> for OntologyError {
    fn from(e: GleasonError) -> Self {
        OntologyError::Gleason(Box::new(e))
    }
}

pub type OntologyResult<T> = Result<T, OntologyError>;

// ---------------------------------------------------------------------------
// The model trait
// ---------------------------------------------------------------------------

/// An ontological model: preparation distribution, context distribution and
/// response function. Implementations must be usable from several workers
/// at once; the framework never mutates model state and all randomness goes
/// through the explicit RNG arguments.
pub trait OntologicalModel: Send + Sync {
    /// Model-defined ontic state; opaque to the framework.
    type State: Clone + fmt::Debug;

    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Hard bound N_ctx on the support of the context distribution. The
    /// worst-case contextual information is log2 of this.
    fn context_bound(&self) -> usize;

    /// Samples an ontic state for the preparation (ψ, η_prep).
    fn prepare(
        &self,
        psi: &HVector,
        prep: &PrepContext,
        rng: &mut dyn RngCore,
    ) -> OntologyResult<Self::State>;

    /// P_c(n | x, M, τ) as a sparse list of (n, probability) pairs.
    fn context_distribution(
        &self,
        x: &Self::State,
        m: &MeasurementTuple,
        tau: &MeasContext,
    ) -> OntologyResult<Vec<(ContextIndex, f64)>>;

    /// μ(E | x, n). Errors with [`OntologyError::IndeterminateResponse`]
    /// when (E, n) is not consistent for this state.
    fn response(&self, e: &Projector, x: &Self::State, n: ContextIndex) -> OntologyResult<f64>;

    /// Membership of M in the consistency set Ω_n(x).
    fn omega_contains(&self, n: ContextIndex, x: &Self::State, m: &MeasurementTuple) -> bool;

    /// A printable label for discrete ontic states; models over continuous
    /// spaces return None (histograms then need sampler-side binning).
    fn state_label(&self, x: &Self::State) -> Option<String> {
        let _ = x;
        None
    }
}

/// The Ω_n(x) family of a model, detached so that engineered families can
/// be checked against samplers directly. Connectedness of the member sets
/// is the model's declaration; [`spot_check_connectivity`] probes it
/// heuristically.
type MembershipFn<'a, S> = Box<dyn Fn(ContextIndex, &S, &MeasurementTuple) -> bool + 'a>;

pub struct OmegaFamily<'a, S> {
    contexts: usize,
    membership: MembershipFn<'a, S>,
}

impl<'a, S> OmegaFamily<'a, S> {
    pub fn new(
        contexts: usize,
        membership: impl Fn(ContextIndex, &S, &MeasurementTuple) -> bool + 'a,
    ) -> Self {
        OmegaFamily {
            contexts,
            membership: Box::new(membership),
        }
    }

    pub fn from_model<M: OntologicalModel<State = S>>(model: &'a M) -> Self {
        OmegaFamily {
            contexts: model.context_bound(),
            membership: Box::new(move |n, x, m| model.omega_contains(n, x, m)),
        }
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn contains(&self, n: ContextIndex, x: &S, m: &MeasurementTuple) -> bool {
        (self.membership)(n, x, m)
    }
}

// ---------------------------------------------------------------------------
// Framework operations
// ---------------------------------------------------------------------------

/// P(E_k | x, M, τ) = Σ_n μ(E_k | x, n) P_c(n | x, M, τ). The projector
/// must be a component of the tuple.
pub fn response_probability<M: OntologicalModel>(
    model: &M,
    e_k: &Projector,
    x: &M::State,
    m: &MeasurementTuple,
    tau: &MeasContext,
) -> OntologyResult<f64> {
    if m.position_of(e_k, COMPONENT_TOL).is_none() {
        return Err(OntologyError::NotAComponent);
    }
    let dist = model.context_distribution(x, m, tau)?;
    let mut acc = 0.0;
    for (n, p) in dist {
        if p == 0.0 {
            continue;
        }
        acc += model.response(e_k, x, n)? * p;
    }
    Ok(acc)
}

/// Checks response normalization (Σ_k μ(E_k|x,n) = 1) and non-negativity
/// on every sampled measurement, for every context index whose consistency
/// set contains the measurement; other (E, n) pairs are skipped as
/// indeterminate. Also reports the normalization defect of the context
/// distribution itself.
pub fn check_response_consistency<M: OntologicalModel>(
    model: &M,
    x: &M::State,
    measurements: &[MeasurementTuple],
    tau: &MeasContext,
) -> OntologyResult<CheckReport> {
    let mut max_norm_defect = 0.0f64;
    let mut max_negativity = 0.0f64;
    let mut max_context_defect = 0.0f64;
    let mut checked = 0usize;
    for m in measurements {
        if let Ok(dist) = model.context_distribution(x, m, tau) {
            let total: f64 = dist.iter().map(|(_, p)| p).sum();
            max_context_defect = max_context_defect.max((total - 1.0).abs());
            for (_, p) in &dist {
                max_negativity = max_negativity.max(-p);
            }
        }
        for n in 0..model.context_bound() {
            if !model.omega_contains(n, x, m) {
                continue;
            }
            let mut sum = 0.0;
            for e in m.iter() {
                let v = model.response(e, x, n)?;
                max_negativity = max_negativity.max(-v);
                sum += v;
            }
            max_norm_defect = max_norm_defect.max((sum - 1.0).abs());
            checked += 1;
        }
    }
    let tolerance = 1e-10;
    let worst = max_norm_defect.max(max_negativity);
    Ok(CheckReport::with_verdict(
        "response_consistency",
        json!({
            "model": model.name(),
            "max_normalization_defect": max_norm_defect,
            "max_negativity": max_negativity,
            "max_context_distribution_defect": max_context_defect,
        }),
        worst,
        tolerance,
        worst <= tolerance && max_context_defect <= 1e-12,
        checked,
    ))
}

/// Fraction of sampled measurements claimed by at least one consistency
/// set; the family must cover the whole sampled space (fraction = 1).
pub fn check_covering<S>(
    family: &OmegaFamily<'_, S>,
    x: &S,
    samples: &[MeasurementTuple],
) -> CheckReport {
    let mut covered = 0usize;
    for m in samples {
        if (0..family.contexts()).any(|n| family.contains(n, x, m)) {
            covered += 1;
        }
    }
    let fraction = if samples.is_empty() {
        0.0
    } else {
        covered as f64 / samples.len() as f64
    };
    CheckReport::with_verdict(
        "omega_covering",
        json!({ "covered_fraction": fraction }),
        1.0 - fraction,
        0.0,
        covered == samples.len() && !samples.is_empty(),
        samples.len(),
    )
}

/// Coarse-graining closure: if M is in Ω_n(x), every single merge of two
/// of its outcomes must be as well. Samples not in Ω_n(x) or with fewer
/// than three outcomes are skipped.
pub fn check_coarse_grain_closure<S>(
    family: &OmegaFamily<'_, S>,
    x: &S,
    samples: &[MeasurementTuple],
    n: ContextIndex,
) -> OntologyResult<CheckReport> {
    let mut violations: Vec<String> = Vec::new();
    let mut checked = 0usize;
    for (idx, m) in samples.iter().enumerate() {
        if m.outcomes() < 3 || !family.contains(n, x, m) {
            continue;
        }
        checked += 1;
        for i in 0..m.outcomes() {
            for j in (i + 1)..m.outcomes() {
                let merged = coarse_grain(m, i, j)?;
                if !family.contains(n, x, &merged) {
                    violations.push(format!("sample {idx}: merge ({i}, {j}) leaves the set"));
                }
            }
        }
    }
    let pass = violations.is_empty() && checked > 0;
    Ok(CheckReport::with_verdict(
        "coarse_grain_closure",
        json!({
            "context": n,
            "violations": violations,
        }),
        violations.len() as f64,
        0.0,
        pass,
        checked,
    ))
}

/// Membership of Ω_n(x) must match the support of the context
/// distribution: n is claimed exactly when P_c(n | x, M, τ) > 0 for the
/// probed τ.
pub fn check_omega_consistency<M: OntologicalModel>(
    model: &M,
    x: &M::State,
    samples: &[MeasurementTuple],
    tau: &MeasContext,
) -> CheckReport {
    let mut mismatches = 0usize;
    for m in samples {
        let support: Vec<ContextIndex> = match model.context_distribution(x, m, tau) {
            Ok(dist) => dist
                .iter()
                .filter(|(_, p)| *p > 0.0)
                .map(|(n, _)| *n)
                .collect(),
            Err(_) => Vec::new(),
        };
        for n in 0..model.context_bound() {
            let claimed = model.omega_contains(n, x, m);
            let supported = support.contains(&n);
            if claimed != supported {
                mismatches += 1;
            }
        }
    }
    CheckReport::with_verdict(
        "omega_support_consistency",
        json!({ "model": model.name(), "mismatches": mismatches }),
        mismatches as f64,
        0.0,
        mismatches == 0,
        samples.len(),
    )
}

/// Heuristic connectivity probe for a declared-connected member set: walks
/// a straight-line interpolation between pairs of member measurements
/// (re-orthonormalized at each step) and reports how many interpolation
/// points stay inside. A low fraction is evidence against the declaration,
/// not a proof either way.
pub fn spot_check_connectivity<S>(
    family: &OmegaFamily<'_, S>,
    x: &S,
    members: &[MeasurementTuple],
    n: ContextIndex,
    steps: usize,
) -> CheckReport {
    let mut probed = 0usize;
    let mut inside = 0usize;
    for pair in members.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.outcomes() != b.outcomes() || a.rank_pattern() != b.rank_pattern() {
            continue;
        }
        for s in 1..steps {
            let t = s as f64 / steps as f64;
            if let Some(mid) = interpolate_tuples(a, b, t) {
                probed += 1;
                if family.contains(n, x, &mid) {
                    inside += 1;
                }
            }
        }
    }
    let fraction = if probed == 0 {
        1.0
    } else {
        inside as f64 / probed as f64
    };
    CheckReport::with_verdict(
        "connectivity_spot_check",
        json!({ "context": n, "inside_fraction": fraction }),
        1.0 - fraction,
        0.0,
        inside == probed,
        probed,
    )
    .note("heuristic path sampling; connectedness itself is the model's declaration")
}

/// Geodesic-ish interpolation: blends the two tuples entrywise and
/// re-extracts projectors by spectral rounding. Returns None when the blend
/// is too degenerate to round.
fn interpolate_tuples(
    a: &MeasurementTuple,
    b: &MeasurementTuple,
    t: f64,
) -> Option<MeasurementTuple> {
    use num_complex::Complex64;
    let mut projectors = Vec::with_capacity(a.outcomes());
    for (ea, eb) in a.iter().zip(b.iter()) {
        let blend =
            ea.matrix() * Complex64::new(1.0 - t, 0.0) + eb.matrix() * Complex64::new(t, 0.0);
        let eig = blend.symmetric_eigen();
        let mut rounded = crate::hilbert::CMatrix::zeros(a.dim(), a.dim());
        let mut rank = 0usize;
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > 0.5 {
                let col = eig.eigenvectors.column(k);
                rounded += col * col.adjoint();
                rank += 1;
            }
        }
        if rank != ea.rank() {
            return None;
        }
        projectors.push(Projector::from_matrix(rounded, 1e-8).ok()?);
    }
    MeasurementTuple::new(projectors, 1e-8).ok()
}

// ---------------------------------------------------------------------------
// Born reproduction
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct OutcomeCheck {
    pub empirical: f64,
    pub born: f64,
    pub z: f64,
}

#[derive(Clone, Debug)]
pub struct BornReport {
    pub outcomes: Vec<OutcomeCheck>,
    pub trials: usize,
    pub max_abs_z: f64,
    pub z_threshold: f64,
    pub pass: bool,
    pub state_histogram: Option<BTreeMap<String, usize>>,
}

impl BornReport {
    pub fn to_check_report(&self) -> CheckReport {
        CheckReport::with_verdict(
            "born_reproduction",
            json!({
                "outcomes": self.outcomes.iter().map(|o| json!({
                    "empirical": o.empirical,
                    "born": o.born,
                    "z": o.z,
                })).collect::<Vec<_>>(),
            }),
            self.max_abs_z,
            self.z_threshold,
            self.pass,
            self.trials,
        )
    }
}

/// Monte-Carlo estimate of P(E_k) under the model for a preparation ψ and
/// measurement M, with a per-outcome z-score against the Born value
/// ⟨ψ|E_k|ψ⟩ using the binomial standard error.
#[allow(clippy::too_many_arguments)]
pub fn born_reproduction_check<M: OntologicalModel>(
    model: &M,
    psi: &HVector,
    prep: &PrepContext,
    m: &MeasurementTuple,
    tau: &MeasContext,
    trials: usize,
    z_threshold: f64,
    rng: &mut dyn RngCore,
) -> OntologyResult<BornReport> {
    if trials < MIN_BORN_TRIALS {
        return Err(OntologyError::InsufficientTrials {
            needed: MIN_BORN_TRIALS,
            got: trials,
        });
    }
    if psi.dim() != m.dim() {
        return Err(OntologyError::DimensionMismatch {
            expected: m.dim(),
            got: psi.dim(),
        });
    }
    let mut counts = vec![0usize; m.outcomes()];
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut track_states = true;
    let mut probs = Vec::with_capacity(m.outcomes());
    for _ in 0..trials {
        let x = model.prepare(psi, prep, rng)?;
        if track_states {
            match model.state_label(&x) {
                Some(label) => *histogram.entry(label).or_insert(0) += 1,
                None => track_states = false,
            }
        }
        let dist = model.context_distribution(&x, m, tau)?;
        let n = sample_indexed(&dist, rng)?;
        probs.clear();
        for e in m.iter() {
            probs.push(model.response(e, &x, n)?.max(0.0));
        }
        let outcome = sample_weights(&probs, rng);
        counts[outcome] += 1;
    }

    let mut outcomes = Vec::with_capacity(m.outcomes());
    let mut max_abs_z = 0.0f64;
    for (k, e) in m.iter().enumerate() {
        let born = born_value(psi, e);
        let empirical = counts[k] as f64 / trials as f64;
        let variance = born * (1.0 - born);
        let z = if variance <= 0.0 {
            if (empirical - born).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (empirical - born) / (variance / trials as f64).sqrt()
        };
        max_abs_z = max_abs_z.max(z.abs());
        outcomes.push(OutcomeCheck { empirical, born, z });
    }
    Ok(BornReport {
        outcomes,
        trials,
        max_abs_z,
        z_threshold,
        pass: max_abs_z <= z_threshold,
        state_histogram: if track_states { Some(histogram) } else { None },
    })
}

/// ⟨ψ|E|ψ⟩ without intermediate allocation.
pub fn born_value(psi: &HVector, e: &Projector) -> f64 {
    let v = psi.as_vector();
    let m = e.matrix();
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc += v[i].conj() * m[(i, j)] * v[j];
        }
    }
    acc.re
}

fn sample_indexed(
    dist: &[(ContextIndex, f64)],
    rng: &mut dyn RngCore,
) -> OntologyResult<ContextIndex> {
    let total: f64 = dist.iter().map(|(_, p)| p.max(0.0)).sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(OntologyError::InvalidDistribution { sum: total });
    }
    let mut u = rng.gen::<f64>() * total;
    for (n, p) in dist {
        u -= p.max(0.0);
        if u <= 0.0 {
            return Ok(*n);
        }
    }
    Ok(dist.last().map(|(n, _)| *n).unwrap())
}

fn sample_weights(weights: &[f64], rng: &mut dyn RngCore) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (k, w) in weights.iter().enumerate() {
        u -= w;
        if u <= 0.0 {
            return k;
        }
    }
    weights.len() - 1
}

// ---------------------------------------------------------------------------
// Affine response given the context
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct AffineContextReport {
    pub fit: FitResult,
    pub tolerance: f64,
    pub pass: bool,
}

impl AffineContextReport {
    pub fn to_check_report(&self) -> CheckReport {
        CheckReport::new(
            "affine_response_given_context",
            json!({
                "constants": self.fit.constants.values().collect::<Vec<_>>(),
                "eta_norm": self.fit.eta.norm(),
            }),
            self.fit.rms_residual,
            self.tolerance,
            self.fit.samples,
        )
    }
}

/// Fits μ(E | x, n) = tr(η(x,n) E) + K(x,n) over measurements sampled from
/// the ≥3-outcome part of Ω_n(x), with one constant per tuple position
/// (positions are the patches the theorem assigns constants to). Passes
/// when the rms residual is at most `tolerance`.
pub fn check_affine_given_context<M: OntologicalModel>(
    model: &M,
    x: &M::State,
    n: ContextIndex,
    sampler: &mut dyn FnMut(&mut dyn RngCore) -> MeasurementTuple,
    n_measurements: usize,
    tolerance: f64,
    rng: &mut dyn RngCore,
) -> OntologyResult<AffineContextReport> {
    let mut samples: Vec<FitSample> = Vec::new();
    for _ in 0..n_measurements {
        let m = sampler(rng);
        if m.outcomes() < 3 {
            return Err(OntologyError::TooFewOutcomes {
                outcomes: m.outcomes(),
            });
        }
        if !model.omega_contains(n, x, &m) {
            return Err(OntologyError::OutsideOmega { context: Some(n) });
        }
        for (position, e) in m.iter().enumerate() {
            samples.push(FitSample {
                projector: e.clone(),
                value: model.response(e, x, n)?,
                class: position,
            });
        }
    }
    let fit = fit_affine_classed(&samples)?;
    let pass = fit.rms_residual <= tolerance;
    Ok(AffineContextReport {
        fit,
        tolerance,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Sequential causality
// ---------------------------------------------------------------------------

/// An ordered run of two-outcome measurements {E_k, 𝟙−E_k} with commuting
/// events.
#[derive(Clone, Debug)]
pub struct SequentialScenario {
    events: Vec<Projector>,
    pub tau: MeasContext,
}

impl SequentialScenario {
    pub fn new(events: Vec<Projector>, tau: MeasContext, tol: f64) -> OntologyResult<Self> {
        if events.len() < 2 {
            return Err(OntologyError::EmptyScenario);
        }
        for i in 0..events.len() {
            for j in (i + 1)..events.len() {
                let ab = events[i].matrix() * events[j].matrix();
                let ba = events[j].matrix() * events[i].matrix();
                let defect = (ab - ba).norm();
                if defect > tol {
                    return Err(OntologyError::NonCommutingEvents { defect });
                }
            }
        }
        Ok(SequentialScenario { events, tau })
    }

    pub fn events(&self) -> &[Projector] {
        &self.events
    }

    pub fn steps(&self) -> usize {
        self.events.len()
    }
}

/// Sequential extension of a model: a joint distribution over context
/// tuples n⃗ = (n_1, …, n_k) given the first k events, and responses that
/// may consult the whole tuple. Causality demands that prefixes of the
/// context distribution ignore later events and that step-k responses
/// ignore later context indices; the check probes both.
pub trait SequentialModel: Send + Sync {
    type State: Clone + fmt::Debug;

    /// Cardinality bound of each per-step context index.
    fn step_context_bound(&self) -> usize;

    /// P_c(n_1, …, n_k | x, E_1, …, E_k, τ) for k = events.len().
    fn context_tuple_distribution(
        &self,
        x: &Self::State,
        events: &[Projector],
        tau: &MeasContext,
    ) -> OntologyResult<Vec<(Vec<ContextIndex>, f64)>>;

    /// μ(E_step | x, n⃗) given the full context tuple.
    fn response_given_tuple(
        &self,
        step: usize,
        e: &Projector,
        x: &Self::State,
        n_tuple: &[ContextIndex],
    ) -> OntologyResult<f64>;
}

#[derive(Clone, Debug)]
pub struct SequentialCausalityReport {
    pub max_context_deviation: f64,
    pub max_response_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub prefixes_checked: usize,
}

impl SequentialCausalityReport {
    pub fn to_check_report(&self) -> CheckReport {
        CheckReport::with_verdict(
            "sequential_causality",
            json!({
                "max_context_deviation": self.max_context_deviation,
                "max_response_deviation": self.max_response_deviation,
            }),
            self.max_context_deviation.max(self.max_response_deviation),
            self.tolerance,
            self.pass,
            self.prefixes_checked,
        )
    }
}

/// Verifies the two causality constraints on a sequential scenario:
/// prefix context distributions must not change when later events are
/// replaced (by random commuting alternates from the events' common
/// eigenbasis), and step-k responses must not change when later context
/// indices vary.
pub fn sequential_causality_check<M: SequentialModel>(
    model: &M,
    x: &M::State,
    scenario: &SequentialScenario,
    variations: usize,
    tolerance: f64,
    rng: &mut dyn RngCore,
) -> OntologyResult<SequentialCausalityReport> {
    let events = scenario.events();
    let steps = events.len();
    let basis = common_eigenbasis(events);
    let d = events[0].dim();

    let full = model.context_tuple_distribution(x, events, &scenario.tau)?;
    let mut max_context_dev = 0.0f64;
    let mut max_response_dev = 0.0f64;
    let mut prefixes_checked = 0usize;

    for k in 1..steps {
        let base = prefix_marginal(&full, k);
        // The model's own answer for the truncated event list must agree.
        let truncated = model.context_tuple_distribution(x, &events[..k], &scenario.tau)?;
        max_context_dev = max_context_dev.max(distribution_distance(
            &prefix_marginal(&truncated, k),
            &base,
        ));
        for _ in 0..variations {
            let mut altered = events[..k].to_vec();
            for _ in k..steps {
                altered.push(random_commuting_projector(&basis, d, rng));
            }
            let varied = model.context_tuple_distribution(x, &altered, &scenario.tau)?;
            max_context_dev =
                max_context_dev.max(distribution_distance(&prefix_marginal(&varied, k), &base));
        }
        prefixes_checked += 1;
    }

    // Response causality: group support tuples by k-prefix and compare the
    // step-k response across differing suffixes.
    for k in 0..steps {
        let mut by_prefix: BTreeMap<Vec<ContextIndex>, Vec<f64>> = BTreeMap::new();
        for (tuple, p) in &full {
            if *p <= 0.0 {
                continue;
            }
            let response = model.response_given_tuple(k, &events[k], x, tuple)?;
            by_prefix
                .entry(tuple[..=k].to_vec())
                .or_default()
                .push(response);
        }
        for values in by_prefix.values() {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            max_response_dev = max_response_dev.max(hi - lo);
        }
    }

    Ok(SequentialCausalityReport {
        max_context_deviation: max_context_dev,
        max_response_deviation: max_response_dev,
        tolerance,
        pass: max_context_dev <= tolerance && max_response_dev <= tolerance,
        prefixes_checked,
    })
}

fn prefix_marginal(
    dist: &[(Vec<ContextIndex>, f64)],
    k: usize,
) -> BTreeMap<Vec<ContextIndex>, f64> {
    let mut out: BTreeMap<Vec<ContextIndex>, f64> = BTreeMap::new();
    for (tuple, p) in dist {
        let key: Vec<ContextIndex> = tuple.iter().take(k).copied().collect();
        *out.entry(key).or_insert(0.0) += p;
    }
    out
}

fn distribution_distance(
    a: &BTreeMap<Vec<ContextIndex>, f64>,
    b: &BTreeMap<Vec<ContextIndex>, f64>,
) -> f64 {
    let mut keys: Vec<&Vec<ContextIndex>> = a.keys().collect();
    for k in b.keys() {
        if !a.contains_key(k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Common eigenbasis of a commuting projector family, from the spectral
/// decomposition of a generic positive combination.
fn common_eigenbasis(events: &[Projector]) -> Vec<HVector> {
    let d = events[0].dim();
    let mut h = crate::hilbert::CMatrix::zeros(d, d);
    let mut weight = 1.0;
    for e in events {
        weight *= 0.37;
        h += e.matrix() * num_complex::Complex64::new(weight, 0.0);
    }
    let eig = h.symmetric_eigen();
    (0..d)
        .map(|k| HVector::from_vector(eig.eigenvectors.column(k).into_owned()))
        .collect()
}

fn random_commuting_projector(basis: &[HVector], d: usize, rng: &mut dyn RngCore) -> Projector {
    loop {
        let mut matrix = crate::hilbert::CMatrix::zeros(d, d);
        let mut rank = 0usize;
        for b in basis {
            if rng.gen::<bool>() {
                let v = b.as_vector();
                matrix += v * v.adjoint();
                rank += 1;
            }
        }
        if rank >= 1 && rank < d {
            return Projector::from_matrix(matrix, 1e-8).expect("basis outer products project");
        }
    }
}

// ---------------------------------------------------------------------------
