//! Simulation and analysis of interferometric photon-correlation
//! measurements that tell chaotic light apart from coherent light with
//! amplitude fluctuations.
//!
//! The pipeline mirrors the bench experiment: a stochastic complex field
//! envelope ([`fieldsim`]) passes through an unbalanced Michelson model
//! ([`interferometer`]), the two output intensities are converted to photon
//! time tags ([`detector`]), the tags are histogrammed into normalized
//! second-order correlations ([`correlator`]), and the histograms are fit
//! and classified against the analytic model family ([`analysis`]).
//! [`pipeline`] wires the stages together from a single experiment
//! configuration with deterministic per-realization seeding.

pub mod analysis;
pub mod correlator;
pub mod detector;
pub mod error;
pub mod fieldsim;
pub mod interferometer;
pub mod oracle;
pub mod pipeline;
pub mod stats;
pub mod trace;

pub use correlator::{autocorrelate, cross_correlate, CorrelationHistogram, CorrelationMode};
pub use detector::{detect, DetectorConfig, TagStream};
pub use error::{Error, Result};
pub use fieldsim::{
    generate, generate_chaotic, generate_coherent_am, generate_mixture, SourceModel,
};
pub use interferometer::{
    blocked_arm_intensity, transform, DitherMode, InterferometerConfig, SplitMode,
};
pub use oracle::{oracle_binned, oracle_six_terms};
pub use trace::{FieldTrace, IntensityTrace};
