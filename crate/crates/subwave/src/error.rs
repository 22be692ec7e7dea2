//! Crate-wide error type.

use crate::geometry::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration failed validation. Carries every violation found.
    #[error("invalid configuration: {}", format_violations(.0))]
    InvalidConfig(Vec<Violation>),

    /// A random generator exhausted its resampling budget.
    #[error("packing infeasible: gap constraint still violated after {attempts} resamples")]
    PackingInfeasible { attempts: usize },

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    /// The boundary system factorization detected (near-)singularity.
    #[error("boundary system is ill-conditioned (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("quadrature grid ({n_theta}x{n_phi}) too coarse for harmonic degree {order}")]
    GridTooCoarse {
        n_theta: usize,
        n_phi: usize,
        order: usize,
    },

    #[error("eigensolver failed to converge")]
    EigenFailed,

    /// The plain-capacitance frequency formula only applies to identical resonators.
    #[error("plain-capacitance spectrum requires identical resonators: {0}")]
    NonIdenticalResonators(String),

    #[error("spectrum and landscape were computed from different matrices ({0})")]
    SourceMismatch(String),

    /// A landscape inequality was violated beyond tolerance; this signals an
    /// implementation bug, not a property of the input.
    #[error(
        "landscape inequality violated: mode {mode}, entry {index}, {bound} slack {slack:.3e}"
    )]
    TheoremViolation {
        mode: usize,
        index: usize,
        bound: &'static str,
        slack: f64,
    },

    /// Diagonal dominance of the shifted comparison matrix failed; upstream
    /// capacitance data must be corrupt.
    #[error("shifted comparison matrix is not diagonally dominant in row {row}")]
    DominanceFailure { row: usize },

    #[error("mode index {n} out of range 1..={count}")]
    ModeIndexOutOfRange { n: usize, count: usize },

    #[error("invalid threshold {0}: must be positive")]
    InvalidThreshold(f64),

    #[error("invalid plane specification: {0}")]
    InvalidPlane(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
