use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

fn at(time: &Option<f64>) -> String {
    match time {
        Some(t) => format!(" at t={t}"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {0}: a truncated Fock space needs at least 2 levels")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix exponential out of range: 1-norm {norm:e} exceeds the scaling limit")]
    ExponentialRange { norm: f64 },

    #[error("ill-conditioned matrix{}: reciprocal condition {rcond:e}", at(.time))]
    IllConditioned { rcond: f64, time: Option<f64> },

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("guard band {guard} must be smaller than dimension {dim}")]
    InvalidGuard { guard: usize, dim: usize },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error(
        "step too large at t={time}: ‖H‖·dt = {product:.4} exceeds {limit}; \
         use at least {recommended_steps} steps"
    )]
    StepTooLarge {
        time: f64,
        product: f64,
        limit: f64,
        recommended_steps: usize,
    },

    #[error("integration diverged at t={time}")]
    Divergence { time: f64 },

    #[error("generator is not Hermitian at t={time}: residual {residual:e}")]
    NotHermitian { time: f64, residual: f64 },

    #[error("initial transformation is not unitary: residual {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("metric is not positive definite{}: smallest eigenvalue {min_eigenvalue:e}", at(.time))]
    MetricNotPositive { min_eigenvalue: f64, time: Option<f64> },

    #[error("ω(t) vanishes at t={time}")]
    SingularFrequency { time: f64 },

    #[error("scenario invalid: failed checks [{}]", .failed.join(", "))]
    ScenarioInvalid { failed: Vec<String> },

    #[error("{0} requires perturbation order 2")]
    OrderRequired(&'static str),

    #[error("Fock index {index} too close to the truncation edge (dim {dim}, guard {guard})")]
    IndexNearEdge { index: usize, dim: usize, guard: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Attaches a time stamp to errors that carry one.
    pub fn at_time(self, t: f64) -> Self {
        match self {
            Error::IllConditioned { rcond, .. } => Error::IllConditioned {
                rcond,
                time: Some(t),
            },
            Error::MetricNotPositive { min_eigenvalue, .. } => Error::MetricNotPositive {
                min_eigenvalue,
                time: Some(t),
            },
            other => other,
        }
    }

    /// True for failures of the numerics (divergence, conditioning, range)
    /// as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::ExponentialRange { .. }
                | Error::IllConditioned { .. }
                | Error::Divergence { .. }
                | Error::MetricNotPositive { .. }
                | Error::SingularFrequency { .. }
        )
    }
}
