//! Simulation and analysis of a photon-number-difference key channel driven
//! by twin beams or coherent light.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*F64` / `*F32` aliases below fix the scalar for callers that do not care.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod commands;
pub mod config;
pub mod error;
pub mod num;
pub mod protocol;
pub mod report;
pub mod samples;
pub mod stats;

pub use analysis::{
    build_histogram, fit_gaussian_mixture, reproduce_table1, sweep, FitResult, Histogram, SweepRow,
    SweepTable, Table1Row, Table1Setup,
};
pub use channel::{
    effective_sigma, encode_pulse, measure_difference, shot_noise_sigma, ArrivingPulse, Basis,
    DetectionParams, EncodingParams, PulseRecord, RandomStream, SourceKind, SourceModel,
};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use num::Real;
pub use protocol::{
    alice_generate, apply_attack, decide, estimate_ber, run_session, sift, AttackModel,
    BerEstimate, Decision, MeasurementRecord, Session, SessionParams, SiftedKey, TimingConfig,
};
pub use stats::{
    ber, db_from_sigma_ratio, erfc, mixture_pdf, postselection_efficiency, DecisionPolicy,
    GaussianModel,
};

pub type GaussianModelF64 = GaussianModel<f64>;
pub type GaussianModelF32 = GaussianModel<f32>;
pub type DecisionPolicyF64 = DecisionPolicy<f64>;
pub type DecisionPolicyF32 = DecisionPolicy<f32>;
pub type SourceModelF64 = SourceModel<f64>;
pub type SourceModelF32 = SourceModel<f32>;
pub type EncodingParamsF64 = EncodingParams<f64>;
pub type DetectionParamsF64 = DetectionParams<f64>;
pub type PulseRecordF64 = PulseRecord<f64>;
pub type MeasurementRecordF64 = MeasurementRecord<f64>;
pub type AttackModelF64 = AttackModel<f64>;
pub type TimingConfigF64 = TimingConfig<f64>;
pub type SessionParamsF64 = SessionParams<f64>;
pub type SessionF64 = Session<f64>;
pub type HistogramF64 = Histogram<f64>;
pub type FitResultF64 = FitResult<f64>;
pub type SweepTableF64 = SweepTable<f64>;
