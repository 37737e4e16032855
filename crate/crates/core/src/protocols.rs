//! Shipped models and simulations: the trivial model whose ontic state is
//! the quantum state itself, the outcome-deterministic patch model over a
//! fixed measurement basis, and the one-bit classical simulation of singlet
//! correlations with its quantum oracle.

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

use crate::hilbert::{dot3, norm3, CMatrix, HVector, MeasurementTuple, Projector};
use crate::ontology::{
    born_value, ContextIndex, MeasContext, OntologicalModel, OntologyError, OntologyResult,
    PrepContext,
};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("vector has zero norm")]
    ZeroNormVector,
    #[error("vector norm {norm} is not 1 within {tol:e}")]
    NotUnit { norm: f64, tol: f64 },
    #[error("need at least {needed} rounds, got {got}")]
    TooFewRounds { needed: usize, got: usize },
}

/// The standard-basis measurement (d rank-1 projectors onto e_k).
pub fn standard_basis_tuple(d: usize) -> MeasurementTuple {
    let projectors: Vec<Projector> = (0..d)
        .map(|k| {
            crate::hilbert::projector_from_vector(&HVector::basis(d, k))
                .expect("basis vectors are unit")
        })
        .collect();
    MeasurementTuple::new(projectors, crate::hilbert::DEFAULT_TOL)
        .expect("standard basis is complete")
}

// ---------------------------------------------------------------------------
// The trivial model
// ---------------------------------------------------------------------------

/// The model whose ontic state is the quantum state: preparation is the
/// identity map, there is a single context index, and the response is the
/// Born probability. Noncontextual and exact by construction.
pub struct BbModel {
    dim: usize,
}

/// Builds the trivial model in dimension d >= 2.
pub fn bb_model(d: usize) -> BbModel {
    assert!(d >= 2, "the trivial model needs dimension >= 2");
    BbModel { dim: d }
}

impl OntologicalModel for BbModel {
    type State = HVector;

    fn name(&self) -> &str {
        "bb"
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
        if psi.dim() != self.dim {
            return Err(OntologyError::DimensionMismatch {
                expected: self.dim,
                got: psi.dim(),
            });
        }
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
        if e.dim() != self.dim {
            return Err(OntologyError::DimensionMismatch {
                expected: self.dim,
                got: e.dim(),
            });
        }
        Ok(born_value(x, e))
    }

    fn omega_contains(&self, n: ContextIndex, _x: &HVector, m: &MeasurementTuple) -> bool {
        n == 0 && m.dim() == self.dim
    }
}

// ---------------------------------------------------------------------------
// The outcome-deterministic patch model
// ---------------------------------------------------------------------------

/// Outcome-deterministic model on the patch of measurements coarse-grained
/// from a fixed basis tuple. The ontic state is a basis index sampled with
/// the Born weights; an outcome responds 1 exactly when it absorbs the
/// ontic basis element. On its declared patch the model reproduces the Born
/// statistics while every response is 0 or 1.
///
/// A single context index suffices: the ontic state already determines the
/// outcome of every measurement on the patch, so the consistency set is the
/// whole patch and stays closed under coarse graining.
pub struct DeterministicPatchModel {
    basis: MeasurementTuple,
    tol: f64,
}

pub fn deterministic_patch_model(basis: MeasurementTuple) -> DeterministicPatchModel {
    DeterministicPatchModel { basis, tol: 1e-9 }
}

impl DeterministicPatchModel {
    pub fn basis(&self) -> &MeasurementTuple {
        &self.basis
    }

    /// True when every outcome of `m` is a sum of basis outcomes, i.e. `m`
    /// is a coarse graining of the model's basis (up to outcome ordering).
    pub fn is_on_patch(&self, m: &MeasurementTuple) -> bool {
        if m.dim() != self.basis.dim() {
            return false;
        }
        for e in m.iter() {
            for b in self.basis.iter() {
                let absorbed = e.absorbs(b, self.tol);
                let annihilated = (e.matrix() * b.matrix()).norm() <= self.tol;
                if !absorbed && !annihilated {
                    return false;
                }
            }
        }
        true
    }
}

impl OntologicalModel for DeterministicPatchModel {
    type State = usize;

    fn name(&self) -> &str {
        "deterministic"
    }

    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn context_bound(&self) -> usize {
        1
    }

    fn prepare(
        &self,
        psi: &HVector,
        _prep: &PrepContext,
        rng: &mut dyn RngCore,
    ) -> OntologyResult<usize> {
        if psi.dim() != self.dim() {
            return Err(OntologyError::DimensionMismatch {
                expected: self.dim(),
                got: psi.dim(),
            });
        }
        let weights: Vec<f64> = self
            .basis
            .iter()
            .map(|b| born_value(psi, b).max(0.0))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                return Ok(k);
            }
        }
        Ok(weights.len() - 1)
    }

    /// Measurements outside the declared patch are a membership failure,
    /// reported as an error rather than silently computed.
    fn context_distribution(
        &self,
        _x: &usize,
        m: &MeasurementTuple,
        _tau: &MeasContext,
    ) -> OntologyResult<Vec<(ContextIndex, f64)>> {
        if !self.is_on_patch(m) {
            return Err(OntologyError::OutsideOmega { context: None });
        }
        Ok(vec![(0, 1.0)])
    }

    /// 1 when the outcome absorbs the ontic basis element, 0 when it is
    /// orthogonal to it; anything else is indeterminate (off the patch).
    fn response(&self, e: &Projector, x: &usize, _n: ContextIndex) -> OntologyResult<f64> {
        let b = self.basis.get(*x);
        if e.absorbs(b, self.tol) {
            Ok(1.0)
        } else if (e.matrix() * b.matrix()).norm() <= self.tol {
            Ok(0.0)
        } else {
            Err(OntologyError::IndeterminateResponse)
        }
    }

    fn omega_contains(&self, n: ContextIndex, _x: &usize, m: &MeasurementTuple) -> bool {
        n == 0 && self.is_on_patch(m)
    }

    fn state_label(&self, x: &usize) -> Option<String> {
        Some(x.to_string())
    }
}

// ---------------------------------------------------------------------------
// Bloch vectors and the singlet oracle
// ---------------------------------------------------------------------------

/// A unit vector in R³: a spin measurement direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector([f64; 3]);

impl BlochVector {
    pub fn new(v: [f64; 3]) -> Result<BlochVector, ProtocolError> {
        let n = norm3(&v);
        if (n - 1.0).abs() > 1e-12 {
            return Err(ProtocolError::NotUnit {
                norm: n,
                tol: 1e-12,
            });
        }
        Ok(BlochVector(v))
    }

    /// Normalizes a nonzero vector onto the sphere.
    pub fn from_unnormalized(v: [f64; 3]) -> Result<BlochVector, ProtocolError> {
        let n = norm3(&v);
        if n == 0.0 {
            return Err(ProtocolError::ZeroNormVector);
        }
        Ok(BlochVector([v[0] / n, v[1] / n, v[2] / n]))
    }

    pub fn components(&self) -> [f64; 3] {
        self.0
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        dot3(&self.0, &other.0)
    }
}

/// Uniform direction on the sphere.
pub fn uniform_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    BlochVector(UnitSphere.sample(rng))
}

fn pauli() -> [CMatrix; 3] {
    let z = |re: f64, im: f64| Complex64::new(re, im);
    [
        CMatrix::from_row_slice(2, 2, &[z(0.0, 0.0), z(1.0, 0.0), z(1.0, 0.0), z(0.0, 0.0)]),
        CMatrix::from_row_slice(2, 2, &[z(0.0, 0.0), z(0.0, -1.0), z(0.0, 1.0), z(0.0, 0.0)]),
        CMatrix::from_row_slice(2, 2, &[z(1.0, 0.0), z(0.0, 0.0), z(0.0, 0.0), z(-1.0, 0.0)]),
    ]
}

/// Spin projector (𝟙 ± n·σ)/2 on C².
pub fn spin_projector(direction: &BlochVector, sign: i8) -> Projector {
    let [sx, sy, sz] = pauli();
    let n = direction.components();
    let s = Complex64::new(0.5 * sign as f64, 0.0);
    let matrix = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0)
        + (sx * Complex64::new(n[0], 0.0)
            + sy * Complex64::new(n[1], 0.0)
            + sz * Complex64::new(n[2], 0.0))
            * s;
    Projector::from_matrix(matrix, 1e-12).expect("spin projectors are exact")
}

/// Quantum correlation E[A·B] for spin measurements along a and b on the
/// two-qubit singlet, evaluated from the 4x4 density matrix and the joint
/// spin projectors (never from the closed-form dot product).
pub fn singlet_born_correlation(a: &BlochVector, b: &BlochVector) -> f64 {
    let z = |re: f64| Complex64::new(re, 0.0);
    let inv_sqrt2 = z(1.0 / 2.0_f64.sqrt());
    // (|01⟩ − |10⟩)/√2 in the product basis {|00⟩,|01⟩,|10⟩,|11⟩}.
    let mut psi = nalgebra::DVector::<Complex64>::zeros(4);
    psi[1] = inv_sqrt2;
    psi[2] = -inv_sqrt2;
    let rho = &psi * psi.adjoint();

    let mut correlation = 0.0;
    for s in [1i8, -1] {
        for t in [1i8, -1] {
            let joint = spin_projector(a, s)
                .matrix()
                .kronecker(spin_projector(b, t).matrix());
            let p = crate::hilbert::trace_product(&joint, &rho).re;
            correlation += (s as f64) * (t as f64) * p;
        }
    }
    correlation
}

// ---------------------------------------------------------------------------
// The one-bit EPR protocol
// ---------------------------------------------------------------------------

/// One simulated round: both outcomes, the single communicated bit, and
/// the shared-randomness draw that produced them. The bit field is a bool,
/// so the type itself enforces the one-bit communication budget.
#[derive(Clone, Copy, Debug)]
pub struct EprSample {
    pub outcome_a: i8,
    pub outcome_b: i8,
    pub communicated_bit: bool,
    pub lambda1: [f64; 3],
    pub lambda2: [f64; 3],
}

/// Sign with the deterministic tie-break sgn(0) = +1.
fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// One round of the one-bit singlet protocol over shared random directions
/// λ1, λ2:
///
/// 1. Alice outputs A = −sgn(a·λ1).
/// 2. She sends the bit encoding c = sgn(a·λ1)·sgn(a·λ2) ∈ {+1, −1},
///    mapped to {0, 1} by bit = (1 − c)/2 (so c′ = 1 − 2·bit decodes it).
/// 3. Bob outputs B = sgn(b·(λ1 + c′·λ2)).
///
/// Averaged over uniform λ1, λ2 the correlation E[A·B] equals the singlet
/// value −a·b.
pub fn toner_bacon_round(
    a: &BlochVector,
    b: &BlochVector,
    lambda1: &BlochVector,
    lambda2: &BlochVector,
) -> EprSample {
    let a_l1 = sgn(a.dot(lambda1));
    let a_l2 = sgn(a.dot(lambda2));
    let outcome_a = -a_l1;

    let c = a_l1 * a_l2;
    let communicated_bit = c < 0.0;
    let c_prime = 1.0 - 2.0 * (communicated_bit as u8 as f64);

    let l1 = lambda1.components();
    let l2 = lambda2.components();
    let arg = [
        l1[0] + c_prime * l2[0],
        l1[1] + c_prime * l2[1],
        l1[2] + c_prime * l2[2],
    ];
    let outcome_b = sgn(dot3(&b.components(), &arg));

    EprSample {
        outcome_a: outcome_a as i8,
        outcome_b: outcome_b as i8,
        communicated_bit,
        lambda1: l1,
        lambda2: l2,
    }
}

/// A bipartite correlation protocol: one round yields the ±1 outcomes for
/// measurement directions a and b.
pub trait EprProtocol: Send + Sync {
    fn name(&self) -> &str;
    fn round(&self, a: &BlochVector, b: &BlochVector, rng: &mut dyn RngCore) -> (i8, i8);
}

/// The one-bit protocol with uniformly drawn shared directions.
pub struct TonerBacon;

impl EprProtocol for TonerBacon {
    fn name(&self) -> &str {
        "toner-bacon"
    }

    fn round(&self, a: &BlochVector, b: &BlochVector, rng: &mut dyn RngCore) -> (i8, i8) {
        let l1 = uniform_bloch(rng);
        let l2 = uniform_bloch(rng);
        let sample = toner_bacon_round(a, b, &l1, &l2);
        (sample.outcome_a, sample.outcome_b)
    }
}

/// Sample mean and standard error of the product A·B.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Correlation {
    pub mean: f64,
    pub std_error: f64,
    pub rounds: usize,
}

/// Monte-Carlo estimate of E[A·B] over `rounds` protocol rounds, with the
/// binomial-style standard error sqrt((1 − mean²)/N).
pub fn estimate_correlation(
    protocol: &dyn EprProtocol,
    a: &BlochVector,
    b: &BlochVector,
    rounds: usize,
    rng: &mut dyn RngCore,
) -> Result<Correlation, ProtocolError> {
    if rounds < 1_000 {
        return Err(ProtocolError::TooFewRounds {
            needed: 1_000,
            got: rounds,
        });
    }
    let mut sum: i64 = 0;
    for _ in 0..rounds {
        let (oa, ob) = protocol.round(a, b, rng);
        sum += (oa as i64) * (ob as i64);
    }
    let mean = sum as f64 / rounds as f64;
    let std_error = ((1.0 - mean * mean).max(0.0) / rounds as f64).sqrt();
    Ok(Correlation {
        mean,
        std_error,
        rounds,
    })
}

/// Marginal bias of one party's outcome over `rounds` rounds.
pub fn estimate_marginal(
    protocol: &dyn EprProtocol,
    a: &BlochVector,
    b: &BlochVector,
    of_bob: bool,
    rounds: usize,
    rng: &mut dyn RngCore,
) -> Result<Correlation, ProtocolError> {
    if rounds < 1_000 {
        return Err(ProtocolError::TooFewRounds {
            needed: 1_000,
            got: rounds,
        });
    }
    let mut sum: i64 = 0;
    for _ in 0..rounds {
        let (oa, ob) = protocol.round(a, b, rng);
        sum += if of_bob { ob as i64 } else { oa as i64 };
    }
    let mean = sum as f64 / rounds as f64;
    let std_error = ((1.0 - mean * mean).max(0.0) / rounds as f64).sqrt();
    Ok(Correlation {
        mean,
        std_error,
        rounds,
    })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coarse_grain, random_complete_tuple};
    use crate::ontology::{
        born_reproduction_check, check_response_consistency, response_probability,
        DEFAULT_Z_THRESHOLD,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    #[test]
    fn bb_response_on_matching_basis_state_is_one() {
        let model = bb_model(3);
        let e = crate::hilbert::projector_from_vector(&HVector::basis(3, 0)).unwrap();
        let v = model.response(&e, &HVector::basis(3, 0), 0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bb_responses_sum_to_one_exactly_on_tuples() {
        let model = bb_model(4);
        let mut r = rng(3);
        let psi = HVector::random_unit(4, &mut r);
        let m = random_complete_tuple(4, &[1, 1, 2], &mut r).unwrap();
        let total: f64 = m.iter().map(|e| model.response(e, &psi, 0).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bb_single_context_makes_response_probability_direct() {
        let model = bb_model(3);
        let mut r = rng(5);
        let psi = HVector::random_unit(3, &mut r);
        let m = random_complete_tuple(3, &[1, 1, 1], &mut r).unwrap();
        let direct = model.response(m.get(1), &psi, 0).unwrap();
        let combined =
            response_probability(&model, m.get(1), &psi, &m, &MeasContext::default()).unwrap();
        assert!((combined - direct).abs() < 1e-15);
    }

    #[test]
    fn deterministic_model_is_certain_on_its_basis_state() {
        let basis = standard_basis_tuple(3);
        let model = deterministic_patch_model(basis.clone());
        let mut r = rng(7);
        // Prepared in e1, the ontic state is always index 1 and outcome 1
        // of the basis measurement fires with certainty.
        for _ in 0..50 {
            let x = model
                .prepare(&HVector::basis(3, 1), &PrepContext::default(), &mut r)
                .unwrap();
            assert_eq!(x, 1);
            assert_eq!(model.response(basis.get(1), &x, 0).unwrap(), 1.0);
            assert_eq!(model.response(basis.get(0), &x, 0).unwrap(), 0.0);
        }
    }

    #[test]
    fn deterministic_model_reproduces_superposition_statistics() {
        let basis = standard_basis_tuple(3);
        let model = deterministic_patch_model(basis.clone());
        let mut r = rng(11);
        let s = 1.0 / 2.0_f64.sqrt();
        let psi = HVector::new(vec![
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let report = born_reproduction_check(
            &model,
            &psi,
            &PrepContext::default(),
            &basis,
            &MeasContext::default(),
            100_000,
            DEFAULT_Z_THRESHOLD,
            &mut r,
        )
        .unwrap();
        assert!(report.pass, "max |z| = {}", report.max_abs_z);
        assert!((report.outcomes[0].born - 0.5).abs() < 1e-12);
        // Ontic-state histogram is available for this discrete model.
        let hist = report.state_histogram.expect("discrete states are labeled");
        assert_eq!(hist.len(), 2);
    }

    #[test]
    fn basis_state_gives_exactly_certain_frequencies() {
        // Prepared in a basis state and measured in the basis, the certain
        // outcome has empirical frequency exactly 1 (not just within noise).
        let basis = standard_basis_tuple(3);
        let model = deterministic_patch_model(basis.clone());
        let mut r = rng(12);
        let report = born_reproduction_check(
            &model,
            &HVector::basis(3, 2),
            &PrepContext::default(),
            &basis,
            &MeasContext::default(),
            20_000,
            DEFAULT_Z_THRESHOLD,
            &mut r,
        )
        .unwrap();
        assert_eq!(report.outcomes[2].empirical, 1.0);
        assert_eq!(report.outcomes[0].empirical, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn deterministic_model_rejects_off_patch_measurements() {
        let basis = standard_basis_tuple(3);
        let model = deterministic_patch_model(basis);
        let mut r = rng(13);
        let off_patch = random_complete_tuple(3, &[1, 1, 1], &mut r).unwrap();
        let err = model.context_distribution(&0, &off_patch, &MeasContext::default());
        assert!(matches!(err, Err(OntologyError::OutsideOmega { .. })));
    }

    #[test]
    fn deterministic_model_accepts_coarse_grainings() {
        let basis = standard_basis_tuple(4);
        let model = deterministic_patch_model(basis.clone());
        let merged = coarse_grain(&basis, 0, 2).unwrap();
        assert!(model.is_on_patch(&merged));
        let dist = model
            .context_distribution(&0, &merged, &MeasContext::default())
            .unwrap();
        assert_eq!(dist, vec![(0, 1.0)]);
    }

    #[test]
    fn deterministic_model_passes_response_consistency_on_patch() {
        let basis = standard_basis_tuple(4);
        let model = deterministic_patch_model(basis.clone());
        let samples = vec![
            basis.clone(),
            coarse_grain(&basis, 0, 1).unwrap(),
            coarse_grain(&basis, 1, 3).unwrap(),
        ];
        let report =
            check_response_consistency(&model, &2, &samples, &MeasContext::default()).unwrap();
        assert!(report.pass, "{report:?}");
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn deterministic_responses_are_always_zero_or_one() {
        let basis = standard_basis_tuple(4);
        let model = deterministic_patch_model(basis.clone());
        let mut patch = vec![basis.clone()];
        for i in 0..4 {
            for j in (i + 1)..4 {
                patch.push(coarse_grain(&basis, i, j).unwrap());
            }
        }
        for x in 0..4usize {
            for m in &patch {
                for e in m.iter() {
                    let v = model.response(e, &x, 0).unwrap();
                    assert!(v == 0.0 || v == 1.0, "non-deterministic response {v}");
                }
            }
        }
    }

    #[test]
    fn bloch_vectors_validate_norm() {
        assert!(BlochVector::new([1.0, 0.0, 0.0]).is_ok());
        assert!(matches!(
            BlochVector::new([1.0, 1.0, 0.0]),
            Err(ProtocolError::NotUnit { .. })
        ));
        assert!(matches!(
            BlochVector::from_unnormalized([0.0, 0.0, 0.0]),
            Err(ProtocolError::ZeroNormVector)
        ));
        let v = BlochVector::from_unnormalized([3.0, 4.0, 0.0]).unwrap();
        assert!((norm3(&v.components()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singlet_oracle_matches_the_dot_product_law() {
        let a = BlochVector::new([0.0, 0.0, 1.0]).unwrap();
        assert!((singlet_born_correlation(&a, &a) - (-1.0)).abs() < 1e-12);

        let b = BlochVector::new([1.0, 0.0, 0.0]).unwrap();
        assert!(singlet_born_correlation(&a, &b).abs() < 1e-12);

        let mut r = rng(17);
        for _ in 0..20 {
            let a = uniform_bloch(&mut r);
            let b = uniform_bloch(&mut r);
            let expected = -a.dot(&b);
            assert!((singlet_born_correlation(&a, &b) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn aligned_directions_anticorrelate_every_round() {
        let mut r = rng(19);
        let a = uniform_bloch(&mut r);
        for _ in 0..200 {
            let l1 = uniform_bloch(&mut r);
            let l2 = uniform_bloch(&mut r);
            let sample = toner_bacon_round(&a, &a, &l1, &l2);
            assert_eq!(sample.outcome_a * sample.outcome_b, -1);
        }
    }

    #[test]
    fn protocol_correlation_tracks_the_singlet_oracle() {
        let mut r = rng(23);
        let a = BlochVector::new([0.0, 0.0, 1.0]).unwrap();
        let half = 0.5f64.sqrt();
        let b = BlochVector::new([half, 0.0, half]).unwrap();
        let est = estimate_correlation(&TonerBacon, &a, &b, 200_000, &mut r).unwrap();
        let oracle = singlet_born_correlation(&a, &b);
        assert!(
            (est.mean - oracle).abs() <= 5.0 * est.std_error.max(1e-9),
            "mean {} vs oracle {oracle} (stderr {})",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn sixty_degree_correlation_is_minus_half() {
        // cos 60° = 1/2, so the singlet correlation is −0.5.
        let mut r = rng(27);
        let a = BlochVector::new([0.0, 0.0, 1.0]).unwrap();
        let b = BlochVector::new([(3.0f64).sqrt() / 2.0, 0.0, 0.5]).unwrap();
        let est = estimate_correlation(&TonerBacon, &a, &b, 1_000_000, &mut r).unwrap();
        let oracle = singlet_born_correlation(&a, &b);
        assert!((oracle - (-0.5)).abs() < 1e-12);
        assert!(
            (est.mean - oracle).abs() <= 3.0 * est.std_error,
            "mean {} vs -0.5 (stderr {})",
            est.mean,
            est.std_error
        );
    }

    #[test]
    fn marginals_are_unbiased() {
        let mut r = rng(29);
        let a = uniform_bloch(&mut r);
        let b = uniform_bloch(&mut r);
        let est = estimate_marginal(&TonerBacon, &a, &b, true, 100_000, &mut r).unwrap();
        assert!(est.mean.abs() <= 4.0 * est.std_error);
        let est = estimate_marginal(&TonerBacon, &a, &b, false, 100_000, &mut r).unwrap();
        assert!(est.mean.abs() <= 4.0 * est.std_error);
    }

    #[test]
    fn estimates_are_deterministic_for_a_fixed_seed() {
        let a = BlochVector::new([0.0, 1.0, 0.0]).unwrap();
        let b = BlochVector::new([1.0, 0.0, 0.0]).unwrap();
        let run = |seed: u64| {
            let mut r = rng(seed);
            estimate_correlation(&TonerBacon, &a, &b, 10_000, &mut r).unwrap()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42).mean, run(43).mean);
    }

    #[test]
    fn correlation_requires_enough_rounds() {
        let mut r = rng(31);
        let a = uniform_bloch(&mut r);
        let b = uniform_bloch(&mut r);
        assert!(matches!(
            estimate_correlation(&TonerBacon, &a, &b, 10, &mut r),
            Err(ProtocolError::TooFewRounds { .. })
        ));
    }
}
