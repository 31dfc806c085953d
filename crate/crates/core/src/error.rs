use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("cannot evaluate expression at theta = {theta}: {reason}")]
    Eval { theta: f64, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid modulus at theta = {theta}: U = {value}")]
    InvalidModulus { theta: f64, value: f64 },

    #[error("derivative order {requested} unavailable (model provides up to {available})")]
    OrderUnavailable { requested: usize, available: usize },

    #[error("initial condition ({theta}, {rho}) is not regular: U - rho^2 = {margin}")]
    NotRegular { theta: f64, rho: f64, margin: f64 },

    #[error("step failure at theta = {theta}: {reason}")]
    StepFailure { theta: f64, reason: String },

    #[error("no admissible continuation at theta = {theta}: {reason}")]
    NoContinuation { theta: f64, reason: String },

    #[error("complex discriminant {discriminant} (U2 below -rho0^2/2)")]
    ComplexDiscriminant { discriminant: f64 },

    #[error("not a critical initial condition at theta = {theta}: {reason}")]
    NotCritical { theta: f64, reason: String },

    #[error("boundary value problem on [{left}, {right}] has no solution: {reason}")]
    NoSolution { left: f64, right: f64, reason: String },

    #[error("apex at theta = {theta} is not maximum-type (beta roots {beta1}, {beta2})")]
    NotConeApex { theta: f64, beta1: f64, beta2: f64 },

    #[error("initial condition ({theta}, {rho}) is outside the convergence cone")]
    OutsideCone { theta: f64, rho: f64 },

    #[error("io error: {0}")]
    Io(String),

    #[error("invalid input: {0}")]
    Input(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
