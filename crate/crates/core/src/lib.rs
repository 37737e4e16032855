//! Numerical toolkit for probability measures over projectors.
//!
//! The crate verifies, fits and simulates the measure-theoretic structure of
//! projective quantum measurements:
//!
//! - [`hilbert`] — projectors, complete measurement tuples, Haar sampling.
//! - [`measures`] — Born, affine and polynomial measures, frame functions
//!   with radial extension, and a small text DSL for defining test measures.
//! - [`gleason`] — finite-difference verification of the differential
//!   identities satisfied by additive frame functions, least-squares fitting
//!   of the affine form tr(ηE) + K, patch-constant consistency, and
//!   density-operator reconstruction.
//! - [`ontology`] — hidden-variable models with finite contextual
//!   information: response normalization, covering, coarse-graining closure,
//!   Born reproduction and affine-response checks.
//! - [`protocols`] — shipped models (Beltrametti-Bugajski, the
//!   outcome-deterministic patch model, the Toner-Bacon one-bit EPR
//!   protocol) and the singlet correlation oracle.
//! - [`report`] — the JSON check-report schema shared by all verifiers.

pub mod gleason;
pub mod hilbert;
pub mod measures;
pub mod ontology;
pub mod protocols;
pub mod report;
