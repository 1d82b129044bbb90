use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("field mismatch: {0}")]
    Field(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("zero norm: {0}")]
    ZeroNorm(&'static str),
    #[error("empty truncation set")]
    EmptyTruncation,
    #[error("degenerate block (condition estimate {0:e})")]
    DegenerateBlock(f64),
    #[error("outside sign-flip bound regime (needs |h| < (1 - 1/sqrt 2) |x|): |h| = {norm_h}, |x| = {norm_x}")]
    OutsideBoundRegime { norm_h: f64, norm_x: f64 },
    #[error("quadrature did not converge (error estimate {estimate:e})")]
    Quadrature { estimate: f64 },
    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
