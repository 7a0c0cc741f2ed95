use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("power series has zero constant term")]
    ZeroConstantTerm,
    #[error("inner series of a composition must have zero constant term")]
    NonzeroInnerConstant,
    #[error("series is not invertible: linear coefficient is zero")]
    NotInvertible,
    #[error("{quantity}: argument {value} outside domain {domain}")]
    OutOfDomain {
        quantity: &'static str,
        value: f64,
        domain: String,
    },
    #[error("{0} requires a finite second derivative of the Green function")]
    NeedsDerivative(&'static str),
    #[error("root of {0} not bracketed")]
    RootNotBracketed(&'static str),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("Psi(theta_bar) = {0} is not zero within tolerance")]
    NotAtCriticality(f64),
    #[error("invalid singular term (q = {q}, k = {k})")]
    InvalidSingularity { q: f64, k: u32 },
    #[error("factor {0} has no singularity descriptor")]
    MissingSingularity(usize),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("state space exceeded cap of {0} entries")]
    StateExplosion(usize),
    #[error("target {target} outside attainable range ({low}, {high})")]
    TargetOutOfRange { target: f64, low: f64, high: f64 },
    #[error("ambiguous regime: candidates {0:?}")]
    Ambiguous(Vec<char>),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("numeric inconsistency: {0}")]
    Inconsistent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
