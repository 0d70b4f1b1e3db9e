use thiserror::Error;

use crate::model::JobId;

/// Errors raised by the solver toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("instance must have at least one job and one machine (got {n_jobs}x{n_machines})")]
    EmptyInstance { n_jobs: usize, n_machines: usize },

    #[error("processing time matrix has {found} entries, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("job {job} has a zero processing time on machine {machine}")]
    ZeroProcessingTime { job: usize, machine: usize },

    #[error("job id {job} is out of range for {n_jobs} jobs")]
    InvalidJob { job: JobId, n_jobs: usize },

    #[error("delay requires two distinct jobs (got {0} twice)")]
    SameJob(JobId),

    #[error("sequence of length {found} does not cover {expected} jobs")]
    LengthMismatch { expected: usize, found: usize },

    #[error("job {0} appears more than once")]
    DuplicateJob(JobId),

    #[error("invalid insertion move {from} -> {to} for a sequence of length {len}")]
    InvalidMove { from: usize, to: usize, len: usize },

    #[error("destruction size {size} must be in [1, {max}]")]
    InvalidDestructionSize { size: usize, max: usize },

    #[error("invalid confidence level: {0}")]
    InvalidConfidence(String),

    #[error("invalid confidence schedule: {0}")]
    InvalidSchedule(String),

    #[error("pool is invalid: {0}")]
    InvalidPool(String),

    #[error("blocks do not partition the job set: {0}")]
    NotAPartition(String),

    #[error("block {block} is not contiguous in the sequence")]
    Projection { block: String },

    #[error("instance has {n_jobs} jobs, above the enumeration cap of {cap}")]
    EnumerationRefused { n_jobs: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
