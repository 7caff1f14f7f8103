use std::fmt;

use crate::model::ConfigViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside the domain of the operation (non-finite
    /// entries, nonpositive distance, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The reduced precoder is zero (or lies in the null space of `H^H`),
    /// so the equivalent objective and the power normalization are undefined.
    #[error("degenerate precoder: {0}")]
    DegeneratePrecoder(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    #[error("invalid configuration: {}", ViolationList(.0))]
    InvalidConfig(Vec<ConfigViolation>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A Hermitian matrix that must be positive definite failed to factor.
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("channel file: {0}")]
    Format(String),

    #[error("experiment spec: {0}")]
    Spec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

struct ViolationList<'a>(&'a [ConfigViolation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
