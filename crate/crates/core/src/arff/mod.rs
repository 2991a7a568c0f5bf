//! Adaptive random Fourier features: the frequency sampler with optional
//! resampling and Metropolis test.

mod config;
mod frequencies;
mod sampler;
mod trace;
mod train;

pub use config::{ArffConfig, Schedule, Variant};
pub use frequencies::FrequencySet;
pub use sampler::{
    acceptance_ratio, draw_steps, effective_sample_size, mass_from_norms, metropolis_accept,
    metropolis_sweep, perturb, probability_mass, resample, sample_batch, take_accepted,
    ProbabilityMass, Sweep,
};
pub use trace::{
    read_trace_csv, state_digest, write_trace_csv, IterationRecord, Snapshot, TraceSummary,
    TrainTrace, TRACE_COLUMNS, TRACE_SCHEMA_VERSION,
};
pub use train::{test_metrics, train, train_with, TrainOptions};
