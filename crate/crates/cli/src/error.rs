//! CLI errors and the exit-code contract.

use thiserror::Error;

/// Exit codes: 0 success, 1 other error, 2 schema, 3 unknown regime, 4 quadrature, 5 verify FAIL.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] shortmat::Error),

    #[error("verification failed: {0}")]
    Fail(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use shortmat::Error as E;
        match self {
            CliError::Schema(_) => 2,
            CliError::Core(E::RegimeUnknown(_)) => 3,
            CliError::Core(E::QuadratureDivergence { .. }) => 4,
            CliError::Core(
                E::InvariantViolation(_)
                | E::Config(_)
                | E::Domain(_)
                | E::DimensionMismatch { .. }
                | E::InvalidFunction(_)
                | E::DegenerateGradient,
            ) => 2,
            CliError::Fail(_) => 5,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Schema("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Core(shortmat::Error::RegimeUnknown("x".into())).exit_code(),
            3
        );
        let q = shortmat::Error::QuadratureDivergence {
            estimate: 1.0,
            tol: 0.1,
        };
        assert_eq!(CliError::Core(q).exit_code(), 4);
        assert_eq!(CliError::Fail("x".into()).exit_code(), 5);
        let c = shortmat::Error::CutoffTooCoarse { fraction: 0.5 };
        assert_eq!(CliError::Core(c).exit_code(), 1);
    }
}
