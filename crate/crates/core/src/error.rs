use std::fmt;

use thiserror::Error;

/// A single violated scenario invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    /// Fewer antennas than users.
    TooFewAntennas { users: usize, antennas: usize },
    /// Two users share the same `sin θ` (within 1e-12).
    DuplicateSine { first: usize, second: usize },
    /// An angle of arrival outside (-π/2, π/2].
    AoaOutOfRange { user: usize, theta: f64 },
    /// A length-M field does not have M entries.
    LengthMismatch { field: &'static str, expected: usize, found: usize },
    /// A field that must be strictly positive and finite is not.
    NonPositive { field: &'static str, value: f64 },
    /// `L <= (N-1) d_min`: the feasible boxes would be empty.
    InfeasibleGeometry { span: f64, antennas: usize, min_spacing: f64 },
    /// Zero users or zero antennas.
    Empty { field: &'static str },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewAntennas { users, antennas } => {
                write!(f, "N < M: {antennas} antennas cannot separate {users} users")
            }
            Self::DuplicateSine { first, second } => {
                write!(f, "duplicate sin θ: users {first} and {second} arrive from the same direction")
            }
            Self::AoaOutOfRange { user, theta } => {
                write!(f, "AoA of user {user} is {theta} rad, outside (-π/2, π/2]")
            }
            Self::LengthMismatch { field, expected, found } => {
                write!(f, "{field} has {found} entries, expected {expected}")
            }
            Self::NonPositive { field, value } => {
                write!(f, "{field} must be positive and finite, got {value}")
            }
            Self::InfeasibleGeometry { span, antennas, min_spacing } => {
                write!(f, "geometry infeasible: L = {span} <= (N-1) d_min = {}", (*antennas as f64 - 1.0) * min_spacing)
            }
            Self::Empty { field } => write!(f, "{field} must be at least 1"),
        }
    }
}

/// Aggregated scenario validation failures. Never empty when returned as an error.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario:")?;
        for issue in &self.issues {
            write!(f, "\n  - {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationReport),

    #[error("geometry infeasible: L = {span} <= (N-1) d_min with N = {antennas}, d_min = {min_spacing}")]
    InfeasibleGeometry { span: f64, antennas: usize, min_spacing: f64 },

    #[error("channel matrix is rank deficient (condition number of HᴴH = {condition_number:e})")]
    RankDeficient { condition_number: f64 },

    #[error("gain matrix is singular (min eigenvalue {min:e}, max eigenvalue {max:e})")]
    SingularGain { min: f64, max: f64 },

    #[error("similarity-transformed gain matrix is not Hermitian (relative asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigenvalue derivative has imaginary residue {residue:e}")]
    ImaginaryResidue { residue: f64 },

    #[error("degenerate spectrum (min eigenvalue gap {gap:e}) and the policy forbids the trace fallback")]
    DegenerateSpectrum { gap: f64 },

    #[error("antenna index {index} out of range for {len} antennas")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid optimizer options: {0}")]
    Options(String),

    #[error("line search exhausted after {trials} trials")]
    LineSearchExhausted { trials: usize },

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("scenario file: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
