//! Batch front door for the verification toolkit: runs the suites, fits
//! measures, reconstructs density operators, checks shipped models,
//! simulates the one-bit EPR protocol and generates sample files.
//!
//! Reports are JSON with a stable schema; rerunning a command with the same
//! seed and worker count produces an identical report apart from the
//! `timings` object, which [`Report::deterministic_view`] strips.

pub mod samples;

use std::path::Path;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use qgleason::gleason::{fit_affine, reconstruct_density, verify_frame_identities, GleasonError};
use qgleason::hilbert::{
    haar_random_unitary, random_complete_tuple, random_orthogonal_pair, HVector, MeasurementTuple,
    Projector,
};
use qgleason::measures::{dsl::BuiltMeasure, parse_measure_spec, FrameFunction, Measure};
use qgleason::ontology::{
    born_reproduction_check, check_affine_given_context, check_coarse_grain_closure,
    check_covering, check_omega_consistency, check_response_consistency, fixtures,
    sequential_causality_check, MeasContext, OmegaFamily, OntologicalModel, PrepContext,
    SequentialScenario,
};
use qgleason::protocols::{
    bb_model, deterministic_patch_model, estimate_correlation, estimate_marginal,
    singlet_born_correlation, standard_basis_tuple, uniform_bloch, BlochVector, TonerBacon,
};
use qgleason::report::CheckReport;

pub const CLI_SCHEMA_VERSION: u32 = 1;

/// Environment variable consulted for the default seed when `--seed` is
/// not given.
pub const SEED_ENV_VAR: &str = "QGLEASON_SEED";

/// Default rms-residual tolerance for affine fits driven from the CLI.
pub const DEFAULT_FIT_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Exit-code contract: 0 all checks pass, 1 at least one check failed,
/// 2 the configuration was unusable.
pub fn exit_code(outcome: &Result<Report, CliError>) -> i32 {
    match outcome {
        Ok(report) if report.pass => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Fully resolved run configuration (defaults applied); echoed verbatim
/// into the report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    VerifyGleason {
        measure: String,
        dim: usize,
        samples: usize,
        h: f64,
        fit_tol: f64,
        seed: u64,
        workers: usize,
        out: Option<String>,
    },
    Fit {
        measure: Option<String>,
        data: Option<String>,
        dim: usize,
        samples: usize,
        ranks: Vec<usize>,
        fit_tol: f64,
        seed: u64,
        workers: usize,
        out: Option<String>,
    },
    Reconstruct {
        measure: String,
        dim: usize,
        samples: usize,
        seed: u64,
        workers: usize,
        out: Option<String>,
    },
    CheckModel {
        model: String,
        dim: usize,
        trials: usize,
        samples: usize,
        fit_tol: f64,
        z_max: f64,
        seed: u64,
        workers: usize,
        out: Option<String>,
    },
    SimulateEpr {
        rounds: usize,
        grid: usize,
        a: Option<[f64; 3]>,
        b: Option<[f64; 3]>,
        seed: u64,
        workers: usize,
        out: Option<String>,
        csv: Option<String>,
    },
    GenData {
        measure: String,
        dim: usize,
        ranks: Vec<usize>,
        count: usize,
        seed: u64,
        workers: usize,
        out: String,
    },
}

impl RunConfig {
    fn command_name(&self) -> &'static str {
        match self {
            RunConfig::VerifyGleason { .. } => "verify-gleason",
            RunConfig::Fit { .. } => "fit",
            RunConfig::Reconstruct { .. } => "reconstruct",
            RunConfig::CheckModel { .. } => "check-model",
            RunConfig::SimulateEpr { .. } => "simulate-epr",
            RunConfig::GenData { .. } => "gen-data",
        }
    }

    fn workers(&self) -> usize {
        match self {
            RunConfig::VerifyGleason { workers, .. }
            | RunConfig::Fit { workers, .. }
            | RunConfig::Reconstruct { workers, .. }
            | RunConfig::CheckModel { workers, .. }
            | RunConfig::SimulateEpr { workers, .. }
            | RunConfig::GenData { workers, .. } => *workers,
        }
    }

    fn out_path(&self) -> Option<&str> {
        match self {
            RunConfig::VerifyGleason { out, .. }
            | RunConfig::Fit { out, .. }
            | RunConfig::Reconstruct { out, .. }
            | RunConfig::CheckModel { out, .. }
            | RunConfig::SimulateEpr { out, .. } => out.as_deref(),
            RunConfig::GenData { .. } => None,
        }
    }
}

/// Resolves the seed from the flag, the environment, or zero.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    if let Some(seed) = flag {
        return seed;
    }
    std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    pub wall_ms: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
    pub timings: Timings,
}

impl Report {
    /// The report with timing fields removed: the value that must be
    /// identical across reruns with the same seed and worker count.
    pub fn deterministic_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut()
            .expect("report is an object")
            .remove("timings");
        v
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn write_text(path: &str, text: &str) -> Result<(), CliError> {
    if let Some(parent) = Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
                path: path.to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

/// Runs a command to completion and writes the report to the configured
/// output path (if any). Configuration problems are errors; failed checks
/// are a report with `pass = false`.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    if config.workers() != 1 {
        return Err(CliError::Usage(format!(
            "--workers {} is not supported: the suites run single-worker \
             (the count is echoed in reports for downstream compatibility)",
            config.workers()
        )));
    }
    let start = Instant::now();
    let checks = match config {
        RunConfig::VerifyGleason {
            measure,
            dim,
            samples,
            h,
            fit_tol,
            seed,
            ..
        } => cmd_verify_gleason(measure, *dim, *samples, *h, *fit_tol, *seed)?,
        RunConfig::Fit {
            measure,
            data,
            dim,
            samples,
            ranks,
            fit_tol,
            seed,
            ..
        } => cmd_fit(
            measure.as_deref(),
            data.as_deref(),
            *dim,
            *samples,
            ranks,
            *fit_tol,
            *seed,
        )?,
        RunConfig::Reconstruct {
            measure,
            dim,
            samples,
            seed,
            ..
        } => cmd_reconstruct(measure, *dim, *samples, *seed)?,
        RunConfig::CheckModel {
            model,
            dim,
            trials,
            samples,
            fit_tol,
            z_max,
            seed,
            ..
        } => cmd_check_model(model, *dim, *trials, *samples, *fit_tol, *z_max, *seed)?,
        RunConfig::SimulateEpr {
            rounds,
            grid,
            a,
            b,
            seed,
            csv,
            ..
        } => cmd_simulate_epr(*rounds, *grid, *a, *b, *seed, csv.as_deref())?,
        RunConfig::GenData {
            measure,
            dim,
            ranks,
            count,
            seed,
            out,
            ..
        } => cmd_gen_data(measure, *dim, ranks, *count, *seed, out)?,
    };

    let report = Report {
        schema_version: CLI_SCHEMA_VERSION,
        command: config.command_name().to_string(),
        config: serde_json::to_value(config).expect("config serializes"),
        pass: checks.iter().all(|c| c.pass),
        checks,
        timings: Timings {
            wall_ms: start.elapsed().as_millis() as u64,
        },
    };
    if let Some(path) = config.out_path() {
        write_text(path, &report.to_pretty_json())?;
    }
    Ok(report)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut r = ChaCha12Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn load_measure(path: &str, dim: usize) -> Result<BuiltMeasure, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })?;
    let measure = parse_measure_spec(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
    if measure.dim() != dim {
        return Err(CliError::Usage(format!(
            "{path}: measure is on dimension {}, but --dim {dim} was given",
            measure.dim()
        )));
    }
    Ok(measure)
}

/// A Haar-random rank-r projector.
fn sample_projector_of_rank(d: usize, r: usize, rng: &mut dyn RngCore) -> Projector {
    let u = haar_random_unitary(d, rng);
    let block = u.columns(0, r);
    Projector::from_matrix(block * block.adjoint(), 1e-9)
        .expect("Haar column blocks are projectors")
}

fn failing_check(name: &str, err: impl std::fmt::Display) -> CheckReport {
    CheckReport::with_verdict(name, json!({}), f64::INFINITY, 0.0, false, 0).note(format!("{err}"))
}

// ---------------------------------------------------------------------------
// verify-gleason
// ---------------------------------------------------------------------------

fn cmd_verify_gleason(
    measure_path: &str,
    dim: usize,
    samples: usize,
    h: f64,
    fit_tol: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    if dim < 3 {
        return Err(CliError::Usage(
            "verify-gleason requires --dim of at least 3".into(),
        ));
    }
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    if !(1e-5..=1e-2).contains(&h) {
        return Err(CliError::Usage(format!(
            "--h {h} outside the supported range [1e-5, 1e-2]"
        )));
    }
    let measure = load_measure(measure_path, dim)?;
    let mut checks = Vec::new();

    // Frame-function identities on random sections.
    let frame = FrameFunction::from_measure(measure.clone());
    let mut rng = rng_for(seed, 0);
    let mut sampler = || random_orthogonal_pair(dim, &mut rng);
    match verify_frame_identities(&frame, &mut sampler, samples, h) {
        Ok(report) => checks.push(report.to_check_report()),
        Err(e) => checks.push(failing_check("frame_function_identities", e)),
    }

    // Affine fit over rank-1 samples.
    let mut rng = rng_for(seed, 1);
    let n_fit = samples.max(4 * dim * dim);
    match collect_measure_samples(&measure, dim, &[1], n_fit, &mut rng) {
        Ok(fit_samples) => match fit_affine(&fit_samples) {
            Ok(fit) => checks.push(fit.to_check_report(fit_tol)),
            Err(e) => checks.push(failing_check("affine_fit", e)),
        },
        Err(e) => checks.push(failing_check("affine_fit", e)),
    }

    Ok(checks)
}

/// Samples (projector, value) pairs from a measure, cycling through the
/// requested rank classes. Evaluation errors surface with context.
fn collect_measure_samples(
    measure: &dyn Measure,
    dim: usize,
    ranks: &[usize],
    count: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<(Projector, f64)>, GleasonError> {
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let r = ranks[k % ranks.len()];
        let p = sample_projector_of_rank(dim, r, rng);
        let v = measure.value(&p)?;
        out.push((p, v));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn cmd_fit(
    measure_path: Option<&str>,
    data_path: Option<&str>,
    dim: usize,
    samples: usize,
    ranks: &[usize],
    fit_tol: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let collected: Vec<(Projector, f64)> = match (measure_path, data_path) {
        (Some(path), None) => {
            if ranks.is_empty() || ranks.iter().any(|&r| r == 0 || r > dim) {
                return Err(CliError::Usage(format!(
                    "--ranks must list classes in 1..={dim}"
                )));
            }
            let measure = load_measure(path, dim)?;
            let mut rng = rng_for(seed, 0);
            collect_measure_samples(&measure, dim, ranks, samples, &mut rng)
                .map_err(|e| CliError::Usage(format!("{path}: {e}")))?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_string(),
                source,
            })?;
            let (file_dim, parsed) = samples::parse_samples(&text, path)?;
            if file_dim != dim {
                return Err(CliError::Usage(format!(
                    "{path}: sample file is on dimension {file_dim}, but --dim {dim} was given"
                )));
            }
            parsed
        }
        _ => {
            return Err(CliError::Usage(
                "fit needs exactly one of --measure or --data".into(),
            ))
        }
    };

    let check = match fit_affine(&collected) {
        Ok(fit) => fit.to_check_report(fit_tol),
        Err(e) => failing_check("affine_fit", e),
    };
    Ok(vec![check])
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

fn cmd_reconstruct(
    measure_path: &str,
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let measure = load_measure(measure_path, dim)?;
    let mut rng = rng_for(seed, 0);
    let check = match reconstruct_density(&measure, samples, &mut rng) {
        Ok(rec) => {
            let rho = rec.rho.matrix();
            let entries: Vec<[f64; 2]> = rho.iter().map(|z| [z.re, z.im]).collect();
            CheckReport::with_verdict(
                "density_reconstruction",
                json!({
                    "rho_column_major": entries,
                    "trace": rho.trace().re,
                    "min_eigenvalue": rec.rho.min_eigenvalue(),
                    "fit_residual": rec.fit.rms_residual,
                }),
                rec.fit.rms_residual,
                1e-8,
                true,
                rec.fit.samples,
            )
        }
        Err(e) => failing_check("density_reconstruction", e),
    };
    Ok(vec![check])
}

// ---------------------------------------------------------------------------
// check-model
// ---------------------------------------------------------------------------

/// Names accepted by `check-model`. The last three are engineered
/// violators: they exist to demonstrate detection and exit nonzero.
pub fn model_names() -> &'static [&'static str] {
    &[
        "bb",
        "deterministic",
        "uniform-response",
        "quadratic-response",
        "broken-normalization",
    ]
}

#[allow(clippy::too_many_arguments)]
fn cmd_check_model(
    model: &str,
    dim: usize,
    trials: usize,
    samples: usize,
    fit_tol: f64,
    z_max: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    if dim < 3 {
        return Err(CliError::Usage("check-model requires --dim >= 3".into()));
    }
    match model {
        "bb" => check_bb(dim, trials, samples, fit_tol, z_max, seed),
        "deterministic" => check_deterministic(dim, trials, samples, fit_tol, z_max, seed),
        "uniform-response" => check_uniform_violator(dim, trials, samples, z_max, seed),
        "quadratic-response" => check_quadratic_violator(dim, samples, fit_tol, seed),
        "broken-normalization" => check_broken_violator(dim, samples, seed),
        other => Err(CliError::Usage(format!(
            "unknown model `{other}`; available: {}",
            model_names().join(", ")
        ))),
    }
}

fn random_rank1_tuples(d: usize, count: usize, rng: &mut dyn RngCore) -> Vec<MeasurementTuple> {
    (0..count)
        .map(|_| random_complete_tuple(d, &vec![1; d], rng).expect("valid rank pattern"))
        .collect()
}

fn check_bb(
    dim: usize,
    trials: usize,
    samples: usize,
    fit_tol: f64,
    z_max: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let model = bb_model(dim);
    let mut rng = rng_for(seed, 0);
    let psi = HVector::random_unit(dim, &mut rng);
    let x = model
        .prepare(&psi, &PrepContext::default(), &mut rng)
        .expect("trivial preparation");
    let tau = MeasContext::default();

    let mut measurements = random_rank1_tuples(dim, samples.max(8), &mut rng);
    // A mixed-rank pattern exercises the coarse classes too.
    let mut mixed = vec![2usize];
    mixed.extend(std::iter::repeat_n(1, dim - 2));
    measurements.push(random_complete_tuple(dim, &mixed, &mut rng).expect("valid pattern"));

    let mut checks = Vec::new();
    checks.push(
        check_response_consistency(&model, &x, &measurements, &tau)
            .unwrap_or_else(|e| failing_check("response_consistency", e)),
    );
    checks.push(check_omega_consistency(&model, &x, &measurements, &tau));
    let family = OmegaFamily::from_model(&model);
    checks.push(check_covering(&family, &x, &measurements));
    checks.push(
        check_coarse_grain_closure(&family, &x, &measurements, 0)
            .unwrap_or_else(|e| failing_check("coarse_grain_closure", e)),
    );

    let mut rng_born = rng_for(seed, 1);
    let m = random_complete_tuple(dim, &vec![1; dim], &mut rng_born).expect("basis pattern");
    match born_reproduction_check(
        &model,
        &psi,
        &PrepContext::default(),
        &m,
        &tau,
        trials,
        z_max,
        &mut rng_born,
    ) {
        Ok(report) => checks.push(report.to_check_report()),
        Err(e) => checks.push(failing_check("born_reproduction", e)),
    }

    let mut rng_fit = rng_for(seed, 2);
    let mut sampler =
        |r: &mut dyn RngCore| random_complete_tuple(dim, &vec![1; dim], r).expect("basis pattern");
    match check_affine_given_context(
        &model,
        &x,
        0,
        &mut sampler,
        samples.max(30),
        fit_tol,
        &mut rng_fit,
    ) {
        Ok(report) => checks.push(report.to_check_report()),
        Err(e) => checks.push(failing_check("affine_response_given_context", e)),
    }

    let mut rng_seq = rng_for(seed, 3);
    let sequential = fixtures::SequentialBb::new(dim);
    let basis = standard_basis_tuple(dim);
    let events = vec![
        basis
            .get(0)
            .try_add(basis.get(1), 1e-9)
            .expect("orthogonal basis"),
        basis.get(0).clone(),
        basis.get(2).clone(),
    ];
    match SequentialScenario::new(events, tau, 1e-9) {
        Ok(scenario) => {
            match sequential_causality_check(&sequential, &psi, &scenario, 8, 1e-10, &mut rng_seq) {
                Ok(report) => checks.push(report.to_check_report()),
                Err(e) => checks.push(failing_check("sequential_causality", e)),
            }
        }
        Err(e) => checks.push(failing_check("sequential_causality", e)),
    }

    Ok(checks)
}

fn check_deterministic(
    dim: usize,
    trials: usize,
    samples: usize,
    fit_tol: f64,
    z_max: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let basis = standard_basis_tuple(dim);
    let model = deterministic_patch_model(basis.clone());
    let tau = MeasContext::default();
    let mut rng = rng_for(seed, 0);

    // Balanced two-component superposition, the canonical test state.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut components = vec![num_complex::Complex64::new(0.0, 0.0); dim];
    components[0] = num_complex::Complex64::new(s, 0.0);
    components[1] = num_complex::Complex64::new(s, 0.0);
    let psi = HVector::new(components);
    let x = model
        .prepare(&psi, &PrepContext::default(), &mut rng)
        .expect("valid preparation");

    // The declared patch: the basis and all of its single merges.
    let mut patch = vec![basis.clone()];
    for i in 0..dim {
        for j in (i + 1)..dim {
            patch.push(qgleason::hilbert::coarse_grain(&basis, i, j).expect("merge"));
        }
    }
    let _ = samples;

    let mut checks = Vec::new();
    checks.push(
        check_response_consistency(&model, &x, &patch, &tau)
            .unwrap_or_else(|e| failing_check("response_consistency", e)),
    );
    checks.push(check_omega_consistency(&model, &x, &patch, &tau));
    let family = OmegaFamily::from_model(&model);
    checks.push(check_covering(&family, &x, &patch));
    checks.push(
        check_coarse_grain_closure(&family, &x, &patch, 0)
            .unwrap_or_else(|e| failing_check("coarse_grain_closure", e)),
    );

    let mut rng_born = rng_for(seed, 1);
    match born_reproduction_check(
        &model,
        &psi,
        &PrepContext::default(),
        &basis,
        &tau,
        trials,
        z_max,
        &mut rng_born,
    ) {
        Ok(report) => checks.push(report.to_check_report()),
        Err(e) => checks.push(failing_check("born_reproduction", e)),
    }

    let mut rng_fit = rng_for(seed, 2);
    let mut sampler = |_: &mut dyn RngCore| basis.clone();
    match check_affine_given_context(&model, &x, 0, &mut sampler, 20, fit_tol, &mut rng_fit) {
        Ok(report) => checks.push(report.to_check_report()),
        Err(e) => checks.push(failing_check("affine_response_given_context", e)),
    }

    Ok(checks)
}

fn check_uniform_violator(
    dim: usize,
    trials: usize,
    samples: usize,
    z_max: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let model = fixtures::UniformResponseModel::new(dim);
    let tau = MeasContext::default();
    let mut rng = rng_for(seed, 0);
    let measurements = random_rank1_tuples(dim, samples.max(8), &mut rng);

    let mut checks = Vec::new();
    checks.push(
        check_response_consistency(&model, &(), &measurements, &tau)
            .unwrap_or_else(|e| failing_check("response_consistency", e)),
    );
    let mut rng_born = rng_for(seed, 1);
    match born_reproduction_check(
        &model,
        &HVector::basis(dim, 0),
        &PrepContext::default(),
        &standard_basis_tuple(dim),
        &tau,
        trials,
        z_max,
        &mut rng_born,
    ) {
        Ok(report) => checks.push(report.to_check_report()),
        Err(e) => checks.push(failing_check("born_reproduction", e)),
    }
    Ok(checks)
}

fn check_quadratic_violator(
    dim: usize,
    samples: usize,
    fit_tol: f64,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let model = fixtures::QuadraticResponseModel::new(dim);
    let mut rng = rng_for(seed, 0);
    let psi = HVector::random_unit(dim, &mut rng);
    let mut sampler =
        |r: &mut dyn RngCore| random_complete_tuple(dim, &vec![1; dim], r).expect("basis pattern");
    let mut rng_fit = rng_for(seed, 1);
    let check = match check_affine_given_context(
        &model,
        &psi,
        0,
        &mut sampler,
        samples.max(60),
        fit_tol,
        &mut rng_fit,
    ) {
        Ok(report) => report.to_check_report(),
        Err(e) => failing_check("affine_response_given_context", e),
    };
    Ok(vec![check])
}

fn check_broken_violator(
    dim: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CheckReport>, CliError> {
    let model = fixtures::BrokenResponseModel::new(dim);
    let tau = MeasContext::default();
    let mut rng = rng_for(seed, 0);
    let measurements: Vec<MeasurementTuple> = (0..samples.max(8))
        .map(|_| random_complete_tuple(dim, &[1, dim - 1], &mut rng).expect("two outcomes"))
        .collect();
    let check = check_response_consistency(&model, &(), &measurements, &tau)
        .unwrap_or_else(|e| failing_check("response_consistency", e));
    Ok(vec![check])
}

// ---------------------------------------------------------------------------
// simulate-epr
// ---------------------------------------------------------------------------

fn parse_direction(v: [f64; 3]) -> Result<BlochVector, CliError> {
    BlochVector::from_unnormalized(v).map_err(|e| CliError::Usage(format!("{e}")))
}

fn cmd_simulate_epr(
    rounds: usize,
    grid: usize,
    a: Option<[f64; 3]>,
    b: Option<[f64; 3]>,
    seed: u64,
    csv_path: Option<&str>,
) -> Result<Vec<CheckReport>, CliError> {
    if rounds < 1_000 {
        return Err(CliError::Usage("--rounds must be at least 1000".into()));
    }
    let pairs: Vec<(BlochVector, BlochVector)> = match (a, b) {
        (Some(a), Some(b)) => vec![(parse_direction(a)?, parse_direction(b)?)],
        (None, None) => {
            if grid < 2 {
                return Err(CliError::Usage("--grid must be at least 2".into()));
            }
            let mut rng = rng_for(seed, 10);
            let z = BlochVector::new([0.0, 0.0, 1.0]).expect("unit");
            let x = BlochVector::new([1.0, 0.0, 0.0]).expect("unit");
            let mut pairs = vec![(z, z), (z, x)];
            while pairs.len() < grid {
                pairs.push((uniform_bloch(&mut rng), uniform_bloch(&mut rng)));
            }
            pairs
        }
        _ => {
            return Err(CliError::Usage(
                "give both --a and --b, or neither (grid mode)".into(),
            ))
        }
    };

    let protocol = TonerBacon;
    let mut checks = Vec::new();
    let mut csv = String::from("a_x,a_y,a_z,b_x,b_y,b_z,N,mean,stderr,seed\n");
    for (idx, (a, b)) in pairs.iter().enumerate() {
        let mut rng = rng_for(seed, 100 + idx as u64);
        let est = estimate_correlation(&protocol, a, b, rounds, &mut rng)
            .map_err(|e| CliError::Usage(format!("{e}")))?;
        let oracle = singlet_born_correlation(a, b);
        let deviation = (est.mean - oracle).abs();
        // Degenerate aligned pairs have zero sampled variance; the epsilon
        // keeps the five-sigma band meaningful at machine precision.
        let tolerance = 5.0 * est.std_error + 1e-9;
        let [ax, ay, az] = a.components();
        let [bx, by, bz] = b.components();
        checks.push(CheckReport::with_verdict(
            "epr_correlation",
            json!({
                "a": [ax, ay, az],
                "b": [bx, by, bz],
                "mean": est.mean,
                "stderr": est.std_error,
                "oracle": oracle,
            }),
            deviation,
            tolerance,
            deviation <= tolerance,
            rounds,
        ));
        csv.push_str(&format!(
            "{ax},{ay},{az},{bx},{by},{bz},{rounds},{},{},{seed}\n",
            est.mean, est.std_error
        ));
    }

    // Marginal bias of both parties on the last pair.
    let (a, b) = pairs.last().expect("at least one pair");
    for (label, of_bob) in [("alice", false), ("bob", true)] {
        let mut rng = rng_for(seed, 200 + of_bob as u64);
        let est = estimate_marginal(&protocol, a, b, of_bob, rounds, &mut rng)
            .map_err(|e| CliError::Usage(format!("{e}")))?;
        let tolerance = 4.0 * est.std_error;
        checks.push(CheckReport::with_verdict(
            "epr_marginal",
            json!({ "party": label, "mean": est.mean, "stderr": est.std_error }),
            est.mean.abs(),
            tolerance,
            est.mean.abs() <= tolerance,
            rounds,
        ));
    }

    if let Some(path) = csv_path {
        write_text(path, &csv)?;
    }
    Ok(checks)
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

fn cmd_gen_data(
    measure_path: &str,
    dim: usize,
    ranks: &[usize],
    count: usize,
    seed: u64,
    out: &str,
) -> Result<Vec<CheckReport>, CliError> {
    if ranks.is_empty() || ranks.iter().any(|&r| r == 0 || r > dim) {
        return Err(CliError::Usage(format!(
            "--ranks must list classes in 1..={dim}"
        )));
    }
    let measure = load_measure(measure_path, dim)?;
    let mut rng = rng_for(seed, 0);
    let collected = collect_measure_samples(&measure, dim, ranks, count, &mut rng)
        .map_err(|e| CliError::Usage(format!("{measure_path}: {e}")))?;
    let text = samples::render_samples(dim, &collected);
    write_text(out, &text)?;
    Ok(vec![CheckReport::with_verdict(
        "sample_generation",
        json!({ "out": out, "count": count, "ranks": ranks }),
        0.0,
        0.0,
        true,
        count,
    )])
}

// ---------------------------------------------------------------------------
