use thiserror::Error;

/// Errors surfaced by oracles, estimators, and drivers.
#[derive(Error, Debug)]
pub enum Error {
    #[error("point contains a non-finite coordinate")]
    InvalidPoint,

    #[error("point outside the declared domain of the objective")]
    DomainError,

    #[error("parameters infeasible: {0}")]
    ParamsInfeasible(String),

    #[error("statevector of {required} amplitudes exceeds budget of {budget}")]
    StateTooLarge { required: u128, budget: u64 },

    #[error("grid spacing {l} exceeds box width {width}")]
    DegenerateGrid { l: f64, width: f64 },

    #[error("ray never leaves/enters the body inside the search bracket")]
    BracketError,

    #[error("invalid argument: {0}")]
    ParamError(String),

    #[error("no convergence within the iteration cap")]
    NoConvergence(Box<crate::reductions::OptimizeReport>),

    #[error("oracle violated its contract: {0}")]
    ContractViolation(String),

    #[error("restriction length does not match index-set size")]
    ArityError,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
