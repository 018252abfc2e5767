//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("mode index {index} out of range for {num_modes} modes")]
    ModeIndexOutOfRange { index: usize, num_modes: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (max |a_ij - conj(a_ji)| = {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("expectation value has imaginary residual {imag:.3e} above tolerance")]
    NonHermitianExpectation { imag: f64 },

    #[error("state vector is not normalized (|1 - norm| = {defect:.3e})")]
    NotNormalized { defect: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset {name:?} has no usable rows ({dropped} dropped)")]
    EmptyDataset { name: String, dropped: usize },

    #[error("gram matrix is ill-conditioned (min eigenvalue {min_eigenvalue:.3e}, condition estimate {condition:.3e})")]
    IllConditioned { min_eigenvalue: f64, condition: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("time {t} outside the schedule interval [0, {total_time}]")]
    TimeOutOfRange { t: f64, total_time: f64 },

    #[error("invalid driver frequency {omega}: the driver ground state must be the unique vacuum")]
    InvalidDriverFrequency { omega: f64 },

    #[error("integration unstable: norm drift {norm_drift:.3e} >= 1e-6; reduce the time step")]
    IntegrationUnstable { norm_drift: f64 },

    #[error("truncation not converged by d = {d_max} (last quadrature change {last_delta:.3e})")]
    TruncationNotConverged { d_max: usize, last_delta: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid precision vector: {0}")]
    InvalidPrecision(String),

    #[error("eigensolver failed (LAPACK info = {info})")]
    Eigensolver { info: i32 },

    #[error("I/O error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
