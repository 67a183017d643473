//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("softmax requires at least one logit")]
    EmptyLogits,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("cannot normalize a zero vector")]
    ZeroVector,

    #[error("token {token} out of range for vocabulary of size {vocab}")]
    TokenOutOfRange { token: usize, vocab: usize },

    #[error("variance must be positive, got {0}")]
    InvalidVariance(f64),

    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("invalid parameter {name}: {msg}")]
    InvalidParam { name: &'static str, msg: String },

    #[error("vocabulary too small: need {needed} distinct tokens but only {vocab} available")]
    VocabTooSmall { needed: usize, vocab: usize },

    #[error("embedding row {0} has zero norm")]
    ZeroRow(usize),

    #[error("sequence of length {0} is too short (need at least one contextual token plus query and label)")]
    SequenceTooShort(usize),

    #[error("pretrained parameter rejected: pair ({input}, {target}) has probability {prob:.6e} outside ({lo:.6e}, {hi:.6e})")]
    PretrainedWindow {
        input: usize,
        target: usize,
        prob: f64,
        lo: f64,
        hi: f64,
    },

    #[error("training loss increased even at the minimal step size dt = {dt:.3e}")]
    StepSizeFailure { dt: f64 },

    #[error("training loss never reached target {target:.6e}; final loss {final_loss:.6e}")]
    TargetNotReached { target: f64, final_loss: f64 },

    #[error("index {i} is below the asymptotic regime (need i >= {min})")]
    BelowRegime { i: usize, min: usize },

    #[error("dataset invariant violated: {0}")]
    DatasetInvariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no data series to plot")]
    EmptySeries,

    #[error("series `{label}` has {got} points but the x axis has {expected}")]
    SeriesLengthMismatch {
        label: String,
        expected: usize,
        got: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
