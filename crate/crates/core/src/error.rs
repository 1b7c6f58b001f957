use thiserror::Error;

/// Errors raised by the fusion library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    /// The network hit its iteration cap before every neuron fired.
    #[error(
        "incomplete firing: {fired_fraction:.6} of neurons fired after {iterations} iterations"
    )]
    IncompleteFiring {
        iterations: usize,
        fired_fraction: f64,
    },
}

pub type Result<T> = std::result::Result<T, FusionError>;

pub(crate) fn ensure_same_dims(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(FusionError::DimensionMismatch {
            left_width: left.0,
            left_height: left.1,
            right_width: right.0,
            right_height: right.1,
        })
    }
}
