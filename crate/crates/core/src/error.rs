use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mollifier spec: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid filament: {0}")]
    InvalidFilament(String),
    #[error("divergent moment: atom {atom} has exponent {exponent} <= 0 ({what})")]
    DivergentMoment {
        atom: usize,
        exponent: f64,
        what: &'static str,
    },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("fit domain: {0}")]
    FitDomain(String),
    #[error("margin violation: {0}")]
    MarginViolation(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded(_) => 3,
            Error::FitDomain(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidFilament(_) => "invalid_filament",
            Error::DivergentMoment { .. } => "divergent_moment",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::FitDomain(_) => "fit_domain",
            Error::MarginViolation(_) => "margin_violation",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
