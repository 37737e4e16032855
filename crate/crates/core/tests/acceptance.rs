//! Acceptance suite: every release criterion as one test, each printing a
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The criteria pin tolerances in code; nothing here is calibrated at run
//! time. Seeds are fixed so the suite is reproducible.

use std::collections::BTreeMap;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qgleason::gleason::{
    fd, fd_tolerance, fit_affine, reconstruct_density, verify_frame_identities, verify_patch_consistency,
    OverlapVerdict, PatchSpec, DEFAULT_FD_STEP,
};
use qgleason::hilbert::{
    coarse_grain, norm3, projector_from_vector, random_complete_tuple, random_orthogonal_pair,
    CMatrix, HVector, MeasurementTuple, Projector,
};
use qgleason::measures::{
    AffineMeasure, BornMeasure, CustomMeasure, DensityOperator, FrameFunction, Measure,
    PolynomialMeasure,
};
use qgleason::ontology::{
    born_reproduction_check, check_affine_given_context, check_coarse_grain_closure,
    check_covering, check_response_consistency, fixtures, ContextIndex, MeasContext, OmegaFamily,
    OntologicalModel, OntologyResult, PrepContext, DEFAULT_Z_THRESHOLD,
};
use qgleason::protocols::{
    bb_model, deterministic_patch_model, estimate_correlation, estimate_marginal,
    singlet_born_correlation, standard_basis_tuple, uniform_bloch, BlochVector, TonerBacon,
};

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn criterion(name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {name} failed: {detail}");
}

fn random_traceless_hermitian<R: Rng>(d: usize, r: &mut R) -> CMatrix {
    let g = CMatrix::from_iterator(
        d,
        d,
        (0..d * d).map(|_| Complex64::new(r.gen_range(-0.5..0.5), r.gen_range(-0.5..0.5))),
    );
    let h = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let shift = h.trace() / Complex64::new(d as f64, 0.0);
    h - CMatrix::identity(d, d) * shift
}

fn cap_vector(center: &HVector, radius: f64, rng: &mut dyn RngCore) -> HVector {
    let noise = HVector::random_unit(center.dim(), rng);
    center
        .add(&noise.scaled(Complex64::new(radius, 0.0)))
        .normalized()
        .expect("cap vectors are nonzero")
}

/// Rank-2 projector from two cap-perturbed orthonormalized directions.
fn cap_rank2(c1: &HVector, c2: &HVector, radius: f64, rng: &mut dyn RngCore) -> Projector {
    let v1 = cap_vector(c1, radius, rng);
    let raw = cap_vector(c2, radius, rng);
    let overlap = v1.inner(&raw);
    let v2 = raw
        .add(&v1.scaled(-overlap))
        .normalized()
        .expect("cap directions are independent");
    let m =
        projector_from_vector(&v1).unwrap().matrix() + projector_from_vector(&v2).unwrap().matrix();
    Projector::from_matrix(m, 1e-9).expect("orthogonal rank-1 sums are projectors")
}

// ---------------------------------------------------------------------------
// 1. Gleason round trip
// ---------------------------------------------------------------------------

#[test]
fn acceptance_1_gleason_round_trip() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for d in 3..=6 {
        let mut r = rng(1000 + d as u64);
        for _ in 0..20 {
            let rho = DensityOperator::random(d, &mut r);
            let born = BornMeasure::new(rho.clone());
            let rec = reconstruct_density(&born, 3 * d * d + 10, &mut r)
                .expect("Born measures reconstruct");
            let err = (rec.rho.matrix() - rho.matrix()).norm();
            worst = worst.max(err);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    criterion(
        "1-gleason-round-trip",
        worst <= 1e-8 && elapsed < 30.0,
        &format!("worst Frobenius error {worst:.3e}, {elapsed:.1}s for 80 reconstructions"),
    );
}

// ---------------------------------------------------------------------------
// 2. Affine fitter on random connected patches
// ---------------------------------------------------------------------------

#[test]
fn acceptance_2_affine_fitter_recovery() {
    let mut worst_eta = 0.0f64;
    let mut worst_k = 0.0f64;
    let mut worst_residual = 0.0f64;
    for d in 3..=5 {
        let mut r = rng(2000 + d as u64);
        for _ in 0..50 {
            let eta = random_traceless_hermitian(d, &mut r);
            let constants = BTreeMap::from([(1usize, 0.2), (2usize, -0.1)]);
            let measure = AffineMeasure::new(eta.clone(), constants).unwrap();

            // A connected patch: perturbations of a random center frame.
            let center1 = HVector::random_unit(d, &mut r);
            let center2 = {
                let raw = HVector::random_unit(d, &mut r);
                let overlap = center1.inner(&raw);
                raw.add(&center1.scaled(-overlap)).normalized().unwrap()
            };
            let n_samples = 3 * (d * d + 2) + 8;
            let mut samples = Vec::with_capacity(n_samples);
            for k in 0..n_samples {
                if k % 2 == 0 {
                    let p = projector_from_vector(&cap_vector(&center1, 0.5, &mut r)).unwrap();
                    let v = measure.value(&p).unwrap();
                    samples.push((p, v));
                } else {
                    let p = cap_rank2(&center1, &center2, 0.5, &mut r);
                    let v = measure.value(&p).unwrap();
                    samples.push((p, v));
                }
            }
            let fit = fit_affine(&samples).expect("affine fits succeed");
            worst_eta = worst_eta.max((&fit.eta - &eta).norm());
            worst_k = worst_k.max((fit.constants[&1] - measure.constant(1).unwrap()).abs());
            worst_k = worst_k.max((fit.constants[&2] - measure.constant(2).unwrap()).abs());
            worst_residual = worst_residual.max(fit.rms_residual);
        }
    }
    criterion(
        "2-affine-fitter",
        worst_eta <= 1e-8 && worst_k <= 1e-8 && worst_residual <= 1e-10,
        &format!(
            "150 fits: eta error {worst_eta:.3e}, K error {worst_k:.3e}, \
             rms residual {worst_residual:.3e}"
        ),
    );
}

// ---------------------------------------------------------------------------
// 3. Frame-identity separation and FD convergence
// ---------------------------------------------------------------------------

/// Analytic third derivatives of f = v1³/‖v‖, the smooth convergence
/// oracle (hand-derived, independent of the stencils).
fn cubic_over_norm_third(v: &[f64; 3], i: usize, j: usize, k: usize) -> f64 {
    let r = norm3(v);
    let x = v[0];
    let d1 = |a: usize| if a == 0 { 1.0 } else { 0.0 };
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let g_i = |a: usize| -v[a] / r.powi(3);
    let g_ij = |a: usize, b: usize| 3.0 * v[a] * v[b] / r.powi(5) - delta(a, b) / r.powi(3);
    let g_ijk = -15.0 * v[i] * v[j] * v[k] / r.powi(7)
        + 3.0 * (delta(i, j) * v[k] + delta(i, k) * v[j] + delta(j, k) * v[i]) / r.powi(5);
    6.0 * d1(i) * d1(j) * d1(k) / r
        + 6.0 * x * (d1(i) * d1(j) * g_i(k) + d1(i) * d1(k) * g_i(j) + d1(j) * d1(k) * g_i(i))
        + 3.0 * x * x * (d1(i) * g_ij(j, k) + d1(j) * g_ij(i, k) + d1(k) * g_ij(i, j))
        + x.powi(3) * g_ijk
}

#[test]
fn acceptance_3_frame_identity_separation_and_convergence() {
    let d = 3;
    let h = DEFAULT_FD_STEP;
    let tolerance = fd_tolerance(h);
    let mut r = rng(3000);
    let rho = DensityOperator::random(d, &mut r);

    let born_f = FrameFunction::from_measure(BornMeasure::new(rho.clone()));
    let eta = random_traceless_hermitian(d, &mut r);
    let affine_f = FrameFunction::from_measure(
        AffineMeasure::new(eta, BTreeMap::from([(1usize, 0.3)])).unwrap(),
    );
    let quartic_f = FrameFunction::from_measure(PolynomialMeasure::quadratic(rho));

    let mut results = Vec::new();
    for (name, f) in [("born", &born_f), ("affine", &affine_f)] {
        let mut sampler_rng = rng(3100);
        let mut sampler = || random_orthogonal_pair(d, &mut sampler_rng);
        let report = verify_frame_identities(f, &mut sampler, 60, h).unwrap();
        results.push(format!(
            "{name} max third derivative {:.3e}",
            report.max_third_derivative
        ));
        assert!(
            report.pass && report.max_third_derivative <= tolerance,
            "{name} frame function failed the identity check: {report:?}"
        );
    }

    let mut sampler_rng = rng(3200);
    let mut sampler = || random_orthogonal_pair(d, &mut sampler_rng);
    let quartic_report = verify_frame_identities(&quartic_f, &mut sampler, 60, h).unwrap();
    assert!(
        !quartic_report.pass && quartic_report.max_third_derivative >= 10.0 * tolerance,
        "quartic counterexample was not separated: {quartic_report:?}"
    );

    // FD convergence on the smooth oracle: halving h shrinks the deviation
    // from the analytic derivative by at least 3x.
    let g: &fd::SectionFn = &|v: &[f64; 3]| Ok(v[0].powi(3) / norm3(v));
    let point = [0.6, 0.4, -0.7];
    let deviation = |step: f64| {
        let tensor = fd::third_derivative_tensor(g, &point, step).unwrap();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max(
                        (tensor.entries[i][j][k] - cubic_over_norm_third(&point, i, j, k)).abs(),
                    );
                }
            }
        }
        worst
    };
    let ratio = deviation(1e-2) / deviation(5e-3);

    criterion(
        "3-frame-identity-separation",
        ratio >= 3.0,
        &format!(
            "{}; quartic max {:.3e} >= 10x tolerance {:.3e}; convergence ratio {ratio:.2}",
            results.join("; "),
            quartic_report.max_third_derivative,
            tolerance
        ),
    );
}

// ---------------------------------------------------------------------------
// 4. Patch-constant consistency
// ---------------------------------------------------------------------------

fn cap_patch_sampler<'a>(center: HVector, radius: f64) -> qgleason::gleason::ProjectorSampler<'a> {
    Box::new(move |rng: &mut dyn RngCore| {
        projector_from_vector(&cap_vector(&center, radius, rng)).unwrap()
    })
}

#[test]
fn acceptance_4_patch_constant_consistency() {
    let d = 3;
    let mut r = rng(4000);

    // Overlapping patches of one global Born measure: constants agree.
    let rho = DensityOperator::random(d, &mut r);
    let born = BornMeasure::new(rho);
    let overlap_center = HVector::basis(d, 0)
        .add(&HVector::basis(d, 1))
        .scaled(Complex64::new(0.5f64.sqrt(), 0.0));
    let mut patches = vec![
        PatchSpec {
            name: "cap-a".into(),
            sampler: cap_patch_sampler(overlap_center.clone(), 0.6),
            membership: Box::new(|_| true),
        },
        PatchSpec {
            name: "cap-b".into(),
            sampler: cap_patch_sampler(overlap_center.clone(), 0.6),
            membership: Box::new(|_| true),
        },
    ];
    let shared = verify_patch_consistency(&born, &mut patches, 60, 1e-8, &mut r).unwrap();
    let delta_shared = shared.pairs[0].delta_k;
    assert!(shared.pairs[0].overlap);
    assert!(
        shared.all_consistent() && delta_shared <= 1e-8,
        "global measure produced unequal constants: {delta_shared:.3e}"
    );

    // Engineered unequal constants on overlapping declared patches: the
    // report must flag the hypothesis violation.
    let region_a = |e: &Projector| e.matrix()[(0, 0)].re > 0.45;
    let piecewise = CustomMeasure::new(d, move |e| if region_a(e) { 0.7 } else { 0.1 });
    let mut patches = vec![
        PatchSpec {
            name: "inside-a".into(),
            sampler: cap_patch_sampler(HVector::basis(d, 0), 0.2),
            membership: Box::new(region_a),
        },
        PatchSpec {
            name: "mostly-b".into(),
            sampler: cap_patch_sampler(HVector::basis(d, 1), 0.2),
            membership: Box::new(|_| true),
        },
    ];
    let flagged = verify_patch_consistency(&piecewise, &mut patches, 60, 1e-8, &mut r).unwrap();
    assert!(
        flagged.pairs[0].overlap
            && flagged.pairs[0].verdict == OverlapVerdict::OverlapConstantsDiffer
            && !flagged.all_consistent(),
        "hypothesis violation was not flagged: {:?}",
        flagged.pairs[0]
    );

    criterion(
        "4-patch-consistency",
        true,
        &format!(
            "shared-measure ΔK {delta_shared:.3e}; engineered overlap ΔK {:.3e} flagged",
            flagged.pairs[0].delta_k
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Ontology suite with one dedicated violator per check
// ---------------------------------------------------------------------------

/// Eq.-(5) violator: the context distribution leaks probability, so the
/// outcome probabilities cannot sum to 1.
struct SubnormalContextModel {
    dim: usize,
}

impl OntologicalModel for SubnormalContextModel {
    type State = ();

    fn name(&self) -> &str {
        "subnormal-context"
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
        Ok(vec![(0, 0.5), (1, 0.4)])
    }

    fn response(&self, e: &Projector, _x: &(), _n: ContextIndex) -> OntologyResult<f64> {
        Ok(e.rank() as f64 / self.dim as f64)
    }

    fn omega_contains(&self, _n: ContextIndex, _x: &(), _m: &MeasurementTuple) -> bool {
        true
    }
}

#[test]
fn acceptance_5_ontology_suite_and_violators() {
    let d = 3;
    let tau = MeasContext::default();
    let mut r = rng(5000);

    // Compliant models: zero-defect responses on their declared sets.
    let bb = bb_model(d);
    let psi = HVector::random_unit(d, &mut r);
    let x = bb.prepare(&psi, &PrepContext::default(), &mut r).unwrap();
    let tuples: Vec<MeasurementTuple> = (0..25)
        .map(|_| random_complete_tuple(d, &[1, 1, 1], &mut r).unwrap())
        .collect();
    let bb_resp = check_response_consistency(&bb, &x, &tuples, &tau).unwrap();
    assert!(bb_resp.pass && bb_resp.max_residual <= 1e-12, "{bb_resp:?}");
    let bb_family = OmegaFamily::from_model(&bb);
    assert!(check_covering(&bb_family, &x, &tuples).pass);
    assert!(
        check_coarse_grain_closure(&bb_family, &x, &tuples, 0)
            .unwrap()
            .pass
    );
    for m in &tuples {
        let total: f64 = m
            .iter()
            .map(|e| qgleason::ontology::response_probability(&bb, e, &x, m, &tau).unwrap())
            .sum();
        assert!(
            (total - 1.0).abs() <= 1e-12,
            "outcome probabilities leak: {total}"
        );
    }

    let basis = standard_basis_tuple(d);
    let det = deterministic_patch_model(basis.clone());
    let det_x = det
        .prepare(&HVector::basis(d, 1), &PrepContext::default(), &mut r)
        .unwrap();
    let mut patch = vec![basis.clone()];
    for i in 0..d {
        for j in (i + 1)..d {
            patch.push(coarse_grain(&basis, i, j).unwrap());
        }
    }
    let det_resp = check_response_consistency(&det, &det_x, &patch, &tau).unwrap();
    assert!(
        det_resp.pass && det_resp.max_residual == 0.0,
        "{det_resp:?}"
    );
    let det_family = OmegaFamily::from_model(&det);
    assert!(check_covering(&det_family, &det_x, &patch).pass);
    assert!(
        check_coarse_grain_closure(&det_family, &det_x, &patch, 0)
            .unwrap()
            .pass
    );
    for m in &patch {
        let total: f64 = m
            .iter()
            .map(|e| qgleason::ontology::response_probability(&det, e, &det_x, m, &tau).unwrap())
            .sum();
        assert_eq!(total, 1.0, "deterministic outcome probabilities leak");
    }

    // Violator for Eq. (10): responses sum to 1.1.
    let broken = fixtures::BrokenResponseModel::new(d);
    let two_outcome: Vec<MeasurementTuple> = (0..8)
        .map(|_| random_complete_tuple(d, &[1, 2], &mut r).unwrap())
        .collect();
    let broken_report = check_response_consistency(&broken, &(), &two_outcome, &tau).unwrap();
    assert!(!broken_report.pass && (broken_report.max_residual - 0.1).abs() < 1e-12);

    // Violator for Eq. (5): a leaking context distribution.
    let subnormal = SubnormalContextModel { dim: d };
    let sub_report = check_response_consistency(&subnormal, &(), &tuples, &tau).unwrap();
    assert!(!sub_report.pass, "leaking context distribution passed");
    let p_sum: f64 = tuples[0]
        .iter()
        .map(|e| {
            qgleason::ontology::response_probability(&subnormal, e, &(), &tuples[0], &tau).unwrap()
        })
        .sum();
    assert!(
        (p_sum - 0.9).abs() < 1e-12,
        "expected leaked total 0.9, got {p_sum}"
    );

    // Violator for Eq. (9): a family that only claims one rank pattern.
    let partial_family: OmegaFamily<'_, ()> =
        OmegaFamily::new(1, |_, _, m| m.rank_pattern() == vec![1, 1, 1]);
    let mut mixed = tuples.clone();
    mixed.push(random_complete_tuple(d, &[1, 2], &mut r).unwrap());
    let covering_report = check_covering(&partial_family, &(), &mixed);
    assert!(!covering_report.pass);

    // Violator for Eq. (13): "first outcome has rank 1" is not merge-closed.
    let unclosed: OmegaFamily<'_, ()> = OmegaFamily::new(1, |_, _, m| m.get(0).rank() == 1);
    let closure_report = check_coarse_grain_closure(&unclosed, &(), &tuples, 0).unwrap();
    assert!(!closure_report.pass);

    criterion(
        "5-ontology-suite",
        true,
        &format!(
            "bb defect {:.1e}, deterministic defect {:.1e}; all four violators detected",
            bb_resp.max_residual, det_resp.max_residual
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Affine response given the context
// ---------------------------------------------------------------------------

#[test]
fn acceptance_6_affine_response_given_context() {
    let d = 3;
    let n_measurements = 200;
    let mut r = rng(6000);

    let bb = bb_model(d);
    let psi = HVector::random_unit(d, &mut r);
    let x = bb.prepare(&psi, &PrepContext::default(), &mut r).unwrap();
    let mut sampler = |rng: &mut dyn RngCore| random_complete_tuple(d, &[1, 1, 1], rng).unwrap();
    let bb_report =
        check_affine_given_context(&bb, &x, 0, &mut sampler, n_measurements, 1e-8, &mut r).unwrap();
    assert!(
        bb_report.pass && bb_report.fit.rms_residual <= 1e-8,
        "trivial model residual {:.3e}",
        bb_report.fit.rms_residual
    );

    let basis = standard_basis_tuple(d);
    let det = deterministic_patch_model(basis.clone());
    let det_x = det
        .prepare(&HVector::basis(d, 0), &PrepContext::default(), &mut r)
        .unwrap();
    let mut det_sampler = |_: &mut dyn RngCore| basis.clone();
    let det_report = check_affine_given_context(
        &det,
        &det_x,
        0,
        &mut det_sampler,
        n_measurements,
        1e-8,
        &mut r,
    )
    .unwrap();
    assert!(
        det_report.pass && det_report.fit.rms_residual <= 1e-8,
        "deterministic model residual {:.3e}",
        det_report.fit.rms_residual
    );
    for k in det_report.fit.constants.values() {
        assert!(k.abs() < 1e-12 || (k - 1.0).abs() < 1e-12, "K = {k}");
    }

    let quad = fixtures::QuadraticResponseModel::new(d);
    let quad_x = psi.clone();
    let mut quad_sampler =
        |rng: &mut dyn RngCore| random_complete_tuple(d, &[1, 1, 1], rng).unwrap();
    let quad_report = check_affine_given_context(
        &quad,
        &quad_x,
        0,
        &mut quad_sampler,
        n_measurements,
        1e-8,
        &mut r,
    )
    .unwrap();
    assert!(
        !quad_report.pass && quad_report.fit.rms_residual >= 1e-2,
        "non-affine model residual {:.3e} below the separation threshold",
        quad_report.fit.rms_residual
    );

    criterion(
        "6-affine-given-context",
        true,
        &format!(
            "compliant residuals {:.1e}/{:.1e}, non-affine residual {:.3e}",
            bb_report.fit.rms_residual, det_report.fit.rms_residual, quad_report.fit.rms_residual
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Born reproduction sweep
// ---------------------------------------------------------------------------

#[test]
fn acceptance_7_born_reproduction_sweep() {
    let start = Instant::now();
    let d = 3;
    let trials = 100_000;
    let model = bb_model(d);
    let mut outliers = 0usize;
    let mut worst_z = 0.0f64;
    for scenario in 0..100u64 {
        let mut r = rng(7000 + scenario);
        let psi = HVector::random_unit(d, &mut r);
        let m = random_complete_tuple(d, &[1, 1, 1], &mut r).unwrap();
        let report = born_reproduction_check(
            &model,
            &psi,
            &PrepContext::default(),
            &m,
            &MeasContext::default(),
            trials,
            DEFAULT_Z_THRESHOLD,
            &mut r,
        )
        .unwrap();
        worst_z = worst_z.max(report.max_abs_z);
        if !report.pass {
            outliers += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    criterion(
        "7-born-reproduction",
        outliers <= 1 && elapsed < 60.0,
        &format!(
            "100 scenarios x {trials} trials: {outliers} outlier(s), worst |z| {worst_z:.2}, \
             {elapsed:.1}s"
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. EPR simulation against the singlet oracle
// ---------------------------------------------------------------------------

#[test]
fn acceptance_8_epr_simulation() {
    let rounds = 1_000_000;
    let protocol = TonerBacon;
    let mut grid_rng = rng(8000);

    // 20 direction pairs: aligned, orthogonal, then random.
    let z = BlochVector::new([0.0, 0.0, 1.0]).unwrap();
    let x_axis = BlochVector::new([1.0, 0.0, 0.0]).unwrap();
    let mut pairs = vec![(z, z), (z, x_axis)];
    while pairs.len() < 20 {
        pairs.push((uniform_bloch(&mut grid_rng), uniform_bloch(&mut grid_rng)));
    }

    let mut worst_sigma = 0.0f64;
    for (idx, (a, b)) in pairs.iter().enumerate() {
        let mut r = rng(8100 + idx as u64);
        let est = estimate_correlation(&protocol, a, b, rounds, &mut r).unwrap();
        let oracle = singlet_born_correlation(a, b);
        // Aligned pairs anticorrelate exactly: sampled variance is zero, so
        // a machine-precision floor keeps the band meaningful.
        let band = 5.0 * est.std_error + 1e-9;
        let deviation = (est.mean - oracle).abs();
        assert!(
            deviation <= band,
            "pair {idx}: deviation {deviation:.3e} outside 5 sigma ({band:.3e})"
        );
        if est.std_error > 0.0 {
            worst_sigma = worst_sigma.max(deviation / est.std_error);
        }
    }

    // Marginals are unbiased within 4 standard errors.
    let mut r = rng(8200);
    let a = uniform_bloch(&mut r);
    let b = uniform_bloch(&mut r);
    for of_bob in [false, true] {
        let est = estimate_marginal(&protocol, &a, &b, of_bob, rounds, &mut r).unwrap();
        assert!(
            est.mean.abs() <= 4.0 * est.std_error,
            "biased marginal: {} vs stderr {}",
            est.mean,
            est.std_error
        );
    }

    criterion(
        "8-epr-simulation",
        true,
        &format!("20-point grid at N = {rounds}: worst deviation {worst_sigma:.2} sigma"),
    );
}
