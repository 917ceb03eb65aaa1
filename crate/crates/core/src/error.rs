// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the chiralwg library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{n_sites} sites exceeds the dense capacity of {max} sites for {what}")]
    Capacity {
        what: &'static str,
        n_sites: usize,
        max: usize,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too coarse: spacing {spacing} exceeds {limit} wavelengths")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("no total internal reflection: angle {theta} rad is below the critical angle {critical} rad")]
    NoTotalInternalReflection { theta: f64, critical: f64 },

    #[error("field map: {0}")]
    FieldMap(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("trace drift {drift:e} at t = {t}")]
    TraceDrift { t: f64, drift: f64 },

    #[error("positivity violated at t = {t}: minimum eigenvalue {min_eigenvalue:e}")]
    Positivity { t: f64, min_eigenvalue: f64 },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPowerOfTwo(_) => "not_power_of_two",
            Error::SiteOutOfRange { .. } => "site_out_of_range",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Capacity { .. } => "capacity",
            Error::InvalidState(_) => "invalid_state",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::NoTotalInternalReflection { .. } => "no_total_internal_reflection",
            Error::FieldMap(_) => "field_map",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::TraceDrift { .. } => "trace_drift",
            Error::Positivity { .. } => "positivity",
            Error::LinearAlgebra(_) => "linear_algebra",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
