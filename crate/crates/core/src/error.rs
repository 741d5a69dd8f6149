use num_complex::Complex64;
use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HillError {
    #[error("sum diverges for sigma = {sigma} (needs sigma > 1/2)")]
    DivergentSum { sigma: f64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("lambda = {lambda} lies outside the strip S_{n}")]
    StripViolation { n: usize, lambda: Complex64 },

    #[error("divisor lambda - (k pi)^2 nearly vanishes at k = {k} (lambda = {lambda})")]
    NearSingular { k: i64, lambda: Complex64 },

    #[error("truncation K = {k} too small: {reason}")]
    TruncationTooSmall { k: usize, reason: String },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("contour |lambda - {center}| = {radius} does not separate the spectrum: {reason}")]
    Separation {
        center: f64,
        radius: f64,
        reason: String,
    },

    #[error("T_{n} is not contracting (observed ratio {ratio:.3}); n is below the true threshold")]
    ContractionFailure { n: usize, ratio: f64 },

    #[error("Neumann series for n = {n} did not reach tolerance within {terms} terms")]
    NeumannNotConverged { n: usize, terms: usize },

    #[error("index n = {n} is below the threshold {threshold} ({which})")]
    BelowThreshold {
        n: usize,
        threshold: usize,
        which: &'static str,
    },

    #[error("fixed point iteration for alpha_{n} does not contract: {reason}")]
    NonContraction { n: usize, reason: String },

    #[error("winding number of det B_{n} on the disc boundary is {winding}, expected 2")]
    Localization { n: usize, winding: i64 },

    #[error("root search for det B_{n} failed: {reason}")]
    RootFailure { n: usize, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("integration became unstable at t = {t} (norm {norm:e})")]
    Instability { t: f64, norm: f64 },
}

pub type Result<T> = std::result::Result<T, HillError>;
