use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} outside domain (axis {axis})")]
    Domain { axis: usize, point: Vec<f64> },
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("no sign change on bracket [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("iteration cap exceeded: {0}")]
    Convergence(String),
    #[error("budget exceeded: {what} = {value:e} > {budget:e}")]
    Budget { what: String, value: f64, budget: f64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("map is not Henon-like: {0}")]
    NotHenonLike(String),
    #[error("singular horizontal map: {0}")]
    SingularHorizontal(String),
    #[error("not renormalizable: {0}")]
    NotRenormalizable(String),
    #[error("parameter tuning failed: {0}")]
    Tuning(String),
    #[error("scope map failed: {0}")]
    Scope(String),
    #[error("periodic point search failed: {0}")]
    Periodic(String),
    #[error("ambiguous box landing: {0}")]
    Resolution(String),
    #[error("measure estimators disagree: {0}")]
    Measure(String),
    #[error("b^(2^n) underflows double range at n = {0}")]
    Underflow(usize),
    #[error("graph transform: {0}")]
    Surface(String),
}

impl Error {
    /// True for errors that stem from bad input rather than from the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Invalid(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
