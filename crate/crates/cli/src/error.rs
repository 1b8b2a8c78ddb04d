use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("output: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] harmonic_duality::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Core(e) if e.is_resolution() => 4,
            CliError::Core(e) if e.is_input() => 2,
            CliError::Core(_) => 3,
        })
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use harmonic_duality::Error;

    #[test]
    fn exit_codes() {
        let code = |e: CliError| format!("{:?}", e.exit_code());
        assert_eq!(code(CliError::Config("x".into())), format!("{:?}", ExitCode::from(2)));
        assert_eq!(code(Error::NotPositiveDefinite { min_eigenvalue: -1.0, detail: String::new() }.into()), format!("{:?}", ExitCode::from(2)));
        assert_eq!(code(Error::NoConvergence { sweeps: 100, off_norm: 1.0 }.into()), format!("{:?}", ExitCode::from(3)));
        assert_eq!(code(Error::NegativeEigenvalue { value: -1.0 }.into()), format!("{:?}", ExitCode::from(3)));
        assert_eq!(code(Error::UnresolvedGrid { deficit: 1e-3 }.into()), format!("{:?}", ExitCode::from(4)));
        assert_eq!(code(Error::BasisTooSmall { capture: 0.5 }.into()), format!("{:?}", ExitCode::from(4)));
    }
}
