use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("jet orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("jet of order {have} is too short, order {need} is required")]
    InsufficientOrder { have: usize, need: usize },

    #[error("prefix violates f^(m)(0) = (-1)^m f(0)^(m+1) at m = {order}")]
    HypothesisViolated { order: usize },

    #[error("degenerate leading coefficient while solving for derivative {order}")]
    Degenerate { order: usize },

    #[error("quadrature on [{a}, {b}] did not converge within {panels} panels (error estimate {error:e})")]
    Quadrature {
        a: f64,
        b: f64,
        panels: usize,
        error: f64,
    },

    #[error("insufficient data: need at least {need} observations, got {have}")]
    InsufficientData { need: usize, have: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
