//! Engineered models for exercising the consistency checks: one violator
//! per check, plus small compliant constructions. These ship with the crate
//! so the verification suites can demonstrate detection, not just absence
//! of defects.

use rand::RngCore;

use crate::hilbert::{HVector, MeasurementTuple, Projector};
use crate::ontology::{
    ContextIndex, MeasContext, OntologicalModel, OntologyError, OntologyResult, PrepContext,
    SequentialModel,
};

/// Two contexts with fixed weights (0.3, 0.7) and rank-keyed responses;
/// the arithmetic toy behind the convex-combination example.
pub struct TwoContextToy {
    dim: usize,
}

impl TwoContextToy {
    pub fn new(dim: usize) -> Self {
        TwoContextToy { dim }
    }
}

impl OntologicalModel for TwoContextToy {
    type State = ();

    fn name(&self) -> &str {
        "two-context-toy"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn context_bound(&self) -> usize {
        2
    }

    fn prepare(
        &self,
        _psi: &HVector,
        _prep: &PrepContext,
        _rng: &mut dyn RngCore,
    ) -> OntologyResult<()> {
        Ok(())
    }

    fn context_distribution(
        &self,
        _x: &(),
        _m: &MeasurementTuple,
        _tau: &MeasContext,
    ) -> OntologyResult<Vec<(ContextIndex, f64)>> {
        Ok(vec![(0, 0.3), (1, 0.7)])
    }

    fn response(&self, e: &Projector, _x: &(), n: ContextIndex) -> OntologyResult<f64> {
        // Rank-1 outcome of a two-outcome [1, d−1] measurement.
        let low = if n == 0 { 0.2 } else { 0.6 };
        Ok(if e.rank() == 1 { low } else { 1.0 - low })
    }

    fn omega_contains(&self, _n: ContextIndex, _x: &(), m: &MeasurementTuple) -> bool {
        m.outcomes() == 2 && m.get(0).rank() == 1
    }
}

/// Violates response normalization: a two-outcome tuple gets (0.5, 0.6),
/// a defect of exactly 0.1.
pub struct BrokenResponseModel {
    dim: usize,
}

impl BrokenResponseModel {
    pub fn new(dim: usize) -> Self {
        BrokenResponseModel { dim }
    }
}

impl OntologicalModel for BrokenResponseModel {
    type State = ();

    fn name(&self) -> &str {
        "broken-normalization"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn context_bound(&self) -> usize {
        1
    }

    fn prepare(
        &self,
        _psi: &HVector,
        _prep: &PrepContext,
        _rng: &mut dyn RngCore,
    ) -> OntologyResult<()> {
        Ok(())
    }

    fn context_distribution(
        &self,
        _x: &(),
        _m: &MeasurementTuple,
        _tau: &MeasContext,
    ) -> OntologyResult<Vec<(ContextIndex, f64)>> {
        Ok(vec![(0, 1.0)])
    }

    fn response(&self, e: &Projector, _x: &(), _n: ContextIndex) -> OntologyResult<f64> {
        Ok(if e.rank() == 1 { 0.5 } else { 0.6 })
    }

    fn omega_contains(&self, _n: ContextIndex, _x: &(), m: &MeasurementTuple) -> bool {
        m.outcomes() == 2 && m.get(0).rank() == 1
    }
}

/// Responds with rank(E)/d regardless of the prepared state: internally
/// consistent (normalized, non-negative) but maximally wrong about the Born
/// statistics of anything but the maximally mixed state.
pub struct UniformResponseModel {
    dim: usize,
}

impl UniformResponseModel {
    pub fn new(dim: usize) -> Self {
        UniformResponseModel { dim }
    }
}

impl OntologicalModel for UniformResponseModel {
    type State = ();

    fn name(&self) -> &str {
        "uniform-response"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn context_bound(&self) -> usize {
        1
    }

    fn prepare(
        &self,
        _psi: &HVector,
        _prep: &PrepContext,
        _rng: &mut dyn RngCore,
    ) -> OntologyResult<()> {
        Ok(())
    }

    fn context_distribution(
        &self,
        _x: &(),
        _m: &MeasurementTuple,
        _tau: &MeasContext,
    ) -> OntologyResult<Vec<(ContextIndex, f64)>> {
        Ok(vec![(0, 1.0)])
    }

    fn response(&self, e: &Projector, _x: &(), _n: ContextIndex) -> OntologyResult<f64> {
        Ok(e.rank() as f64 / self.dim as f64)
    }

    fn omega_contains(&self, _n: ContextIndex, _x: &(), _m: &MeasurementTuple) -> bool {
        true
    }
}

/// Non-affine responses μ(E | ψ, n) = ⟨ψ|E|ψ⟩²: the shipped counterexample
/// for the affine-response check.
pub struct QuadraticResponseModel {
    dim: usize,
}

impl QuadraticResponseModel {
    pub fn new(dim: usize) -> Self {
        QuadraticResponseModel { dim }
    }
}

impl OntologicalModel for QuadraticResponseModel {
    type State = HVector;

    fn name(&self) -> &str {
        "quadratic-response"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn context_bound(&self) -> usize {
        1
    }

    fn prepare(
        &self,
        psi: &HVector,
        _prep: &PrepContext,
        _rng: &mut dyn RngCore,
    ) -> OntologyResult<HVector> {
        Ok(psi.clone())
    }

    fn context_distribution(
        &self,
        _x: &HVector,
        _m: &MeasurementTuple,
        _tau: &MeasContext,
    ) -> OntologyResult<Vec<(ContextIndex, f64)>> {
        Ok(vec![(0, 1.0)])
    }

    fn response(&self, e: &Projector, x: &HVector, _n: ContextIndex) -> OntologyResult<f64> {
        let p = crate::ontology::born_value(x, e);
        Ok(p * p)
    }

    fn omega_contains(&self, _n: ContextIndex, _x: &HVector, _m: &MeasurementTuple) -> bool {
        true
    }
}

/// The trivial model lifted to sequences of commuting two-outcome
/// measurements: the per-step context index records whether the step fired
/// (a per-step collapse record), the joint index distribution is the Born
/// joint of the commuting events, and the step response just reads its own
/// index. Prefix marginals depend only on earlier events, so the model is
/// causal by construction.
pub struct SequentialBb {
    dim: usize,
}

impl SequentialBb {
    pub fn new(dim: usize) -> Self {
        SequentialBb { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl SequentialModel for SequentialBb {
    type State = HVector;

    fn step_context_bound(&self) -> usize {
        2
    }

    fn context_tuple_distribution(
        &self,
        x: &HVector,
        events: &[Projector],
        _tau: &MeasContext,
    ) -> OntologyResult<Vec<(Vec<ContextIndex>, f64)>> {
        let k = events.len();
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0..(1usize << k) {
            let mut v = x.clone();
            for (step, e) in events.iter().enumerate() {
                let fired = (mask >> step) & 1 == 1;
                let projected = e.apply(&v);
                v = if fired {
                    projected
                } else {
                    v.add(&projected.scaled(num_complex::Complex64::new(-1.0, 0.0)))
                };
            }
            let p = v.norm().powi(2);
            let tuple: Vec<ContextIndex> = (0..k).map(|step| (mask >> step) & 1).collect();
            out.push((tuple, p));
        }
        Ok(out)
    }

    fn response_given_tuple(
        &self,
        step: usize,
        _e: &Projector,
        _x: &HVector,
        n_tuple: &[ContextIndex],
    ) -> OntologyResult<f64> {
        n_tuple
            .get(step)
            .map(|&n| n as f64)
            .ok_or(OntologyError::IndeterminateResponse)
    }
}

/// Causality violator: the first context index is distributed according to
/// the rank of the *last* event in the run, so replacing future events
/// shifts the prefix marginal.
pub struct FutureReadingSequentialModel {
    dim: usize,
}

impl FutureReadingSequentialModel {
    pub fn new(dim: usize) -> Self {
        FutureReadingSequentialModel { dim }
    }
}

impl SequentialModel for FutureReadingSequentialModel {
    type State = HVector;

    fn step_context_bound(&self) -> usize {
        2
    }

    fn context_tuple_distribution(
        &self,
        _x: &HVector,
        events: &[Projector],
        _tau: &MeasContext,
    ) -> OntologyResult<Vec<(Vec<ContextIndex>, f64)>> {
        let k = events.len();
        let q = events
            .last()
            .map(|e| e.rank() as f64 / self.dim as f64)
            .unwrap_or(0.5);
        let mut fired = vec![1; k];
        let mut quiet = vec![0; k];
        fired[0] = 1;
        quiet[0] = 0;
        Ok(vec![(quiet, 1.0 - q), (fired, q)])
    }

    fn response_given_tuple(
        &self,
        step: usize,
        _e: &Projector,
        _x: &HVector,
        n_tuple: &[ContextIndex],
    ) -> OntologyResult<f64> {
        n_tuple
            .get(step)
            .map(|&n| n as f64)
            .ok_or(OntologyError::IndeterminateResponse)
    }
}
