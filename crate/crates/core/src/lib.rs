//! Simulation and estimation toolkit for feed-forward heralded-photon
//! transmission measurement.
//!
//! A correlated photon-pair source heralds idler photons; each herald click
//! opens an optical switch so that (ideally) only heralded photons reach the
//! sample. The crate provides
//!
//! * [`analytic`]: closed-form precision of coherent, Fock and degraded
//!   heralded probes and the quantum-advantage ratio,
//! * [`montecarlo`]: an event-based simulator of the source, delay line,
//!   gated switch, sample and click detectors,
//! * [`estimation`]: the time-tag correlator and the Klyshko, transmission,
//!   precision and heralded g²(0) estimators,
//! * [`harness`]: CSV-producing batch commands behind the `gatedprobe` binary.

pub mod analytic;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod model;
pub mod montecarlo;

pub use error::{Error, Result};
pub use model::{
    validate, Channel, CoincidenceConfig, DetectorConfig, ExperimentConfig, IdlerChannelConfig,
    Profile, SampleConfig, SourceConfig, SwitchConfig, TimeTagStream, TrialCounts,
    ValidationReport,
};
