use thiserror::Error;

/// Errors raised while building or solving a delayed closed loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("derivative order must be at least 1")]
    ZeroDerivativeOrder,

    #[error("polynomial degree {degree} exceeds the supported maximum of {max}")]
    DegreeOutOfRange { degree: usize, max: usize },

    #[error("{what} must not be the zero polynomial")]
    ZeroPolynomial { what: &'static str },

    #[error("characteristic order {order} exceeds the supported maximum of {max}")]
    OrderOverflow { order: usize, max: usize },

    #[error(
        "delayed-term order {delayed} exceeds characteristic order {order}; \
         the loop would be of advanced type"
    )]
    AdvancedType { delayed: usize, order: usize },

    #[error("characteristic roots are not all real and simple: {reason}")]
    RootsNotRealSimple { reason: String },

    #[error("invalid PID gains: {0}")]
    InvalidGains(String),

    #[error("leading triangular coefficient {value:e} vanishes at root {root}; multiple root")]
    DegenerateLeadingCoefficient { root: f64, value: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("root {root} is not a characteristic root of the system")]
    RootNotInSystem { root: f64 },

    #[error("invalid knots: {0}")]
    InvalidKnots(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("invalid forcing term: {0}")]
    InvalidForcing(String),

    #[error("step size {dt} does not align with interval boundaries and knots")]
    StepMisaligned { dt: f64 },

    #[error("horizon {horizon} exceeds the solved range of {solved} intervals")]
    HorizonExceedsSolution { horizon: f64, solved: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
