use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state outside prior support: s = {0}")]
    StateOutsideSupport(f64),

    #[error("score singular at support boundary: s = {0}")]
    SingularScore(f64),

    #[error("Fisher integral diverged (input {input}, s = {state})")]
    FisherDiverged { input: usize, state: f64 },

    #[error("quadrature did not converge: achieved error {achieved:.3e}, requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("non-finite integrand `{0}`")]
    NonFiniteIntegrand(&'static str),

    #[error("degenerate model: Bayesian Fisher information is zero")]
    DegenerateModel,

    #[error("state not identifiable under this design")]
    NotIdentifiable,

    #[error("state unidentifiable from this codeword")]
    UnidentifiableCodeword,

    #[error("no sensing use (band-2 fraction is zero)")]
    NoSensingUse,

    #[error("mutual information {0:.3e} bits is negative beyond tolerance")]
    NegativeInformation(f64),

    #[error("empty region curve")]
    EmptyCurve,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
