use thiserror::Error;

/// Errors raised by the numerical and arithmetic layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("label ({p},{m}) is not coprime")]
    NotCoprime { p: u64, m: u64 },

    #[error("period must be positive")]
    ZeroPeriod,

    #[error("epsilon must be nonzero")]
    ZeroEpsilon,

    #[error("scaled kick k = {k} is negative; flip the sign of epsilon")]
    NegativeKick { k: f64 },

    #[error("k = 0 leaves no pendulum")]
    NoPendulum,

    #[error("lambda = {lambda} lies outside the tongue")]
    OutsideTongue { lambda: f64 },

    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("trajectory is not periodic (closure error {closure:e})")]
    NotPeriodic { closure: f64 },

    #[error("periodic point is not elliptic (trace {trace})")]
    NotElliptic { trace: f64 },

    #[error("orbit winds {found} times instead of {expected}")]
    WrongWinding { expected: u64, found: i64 },

    #[error("orbit repeats after {period} steps")]
    NotPrimitive { period: u64 },

    #[error("ktilde = 0: the resonant circle is a continuum of periodic points")]
    DegenerateCircle,

    #[error("no stable orbit was found")]
    NoStableOrbit,

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
