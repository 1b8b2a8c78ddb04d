use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("asymmetric: |D[{i}][{j}] - D[{j}][{i}]| = {diff:e}")]
    Asymmetric { i: usize, j: usize, diff: f64 },

    #[error("not positive definite: {detail}")]
    NotPositiveDefinite { min_eigenvalue: f64, detail: String },

    #[error("ill-conditioned inverse: condition number {condition:e}")]
    IllConditioned { condition: f64 },

    #[error("outside PD domain: {0}")]
    OutsideDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("Hermite overflow: H_{nu}({z}) is not finite")]
    Overflow { nu: usize, z: f64 },

    #[error("unresolved grid: trace deficit {deficit:e}")]
    UnresolvedGrid { deficit: f64 },

    #[error("basis too small: captured trace fraction {capture}")]
    BasisTooSmall { capture: f64 },

    #[error("work budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("kernel eigenvalue {value:e} below the negativity floor")]
    NegativeEigenvalue { value: f64 },
}

impl Error {
    /// True for failures caused by insufficient quadrature or basis
    /// resolution, which a caller may fix by enlarging the grid.
    pub fn is_resolution(&self) -> bool {
        matches!(self, Error::UnresolvedGrid { .. } | Error::BasisTooSmall { .. })
    }

    /// True for failures caused by bad input rather than numerics.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Asymmetric { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::OutsideDomain(_)
                | Error::InvalidInput(_)
                | Error::DimensionMismatch { .. }
                | Error::BudgetExceeded(_)
        )
    }
}
