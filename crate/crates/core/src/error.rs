use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Variants split into two families: input-contract violations (bad
/// parameters, grids, options) and numerical failures (non-convergence,
/// blow-up). The CLI maps the first family to exit code 2 and the second to
/// exit code 3, see [`Error::is_numerical`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("pair is not in the positive cone P (P = {p:e}, threshold {threshold:e})")]
    NotInCone { p: f64, threshold: f64 },

    #[error("direction is not a maximizer of F on the quarter circle: {0}")]
    NotAMaximizer(String),

    #[error("unclassified parameters, use maximize_f directly: {0}")]
    Unclassified(String),

    #[error("domain truncation error: Q_omega(L/2) = {tail:e} exceeds {threshold:e}")]
    DomainTruncation { tail: f64, threshold: f64 },

    #[error("ground state must be built at omega = 1 for this check (got {0})")]
    NotUnitSpeed(f64),

    #[error("Petviashvili iterate left the cone P (stabilization factor {0:e})")]
    LeftCone(f64),

    #[error("Petviashvili iterate collapsed to zero after {0} iterations")]
    Collapsed(usize),

    #[error("no convergence after {iterations} iterations (last update {last_update:e})")]
    NoConvergence { iterations: usize, last_update: f64 },

    #[error("time step failed the stability probe: {0}")]
    StepTooLarge(String),

    #[error("blow-up or instability at t = {0}")]
    BlowUp(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("no threshold needed for k = {0}: solutions extend to any interval")]
    NoThresholdNeeded(u32),

    #[error("criterion inconclusive: Lambda'' = {lambda_dd:e} (critical case k = 2)")]
    Inconclusive { lambda_dd: f64 },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LeftCone(_)
                | Error::Collapsed(_)
                | Error::NoConvergence { .. }
                | Error::StepTooLarge(_)
                | Error::BlowUp(_)
                | Error::Eigensolver(_)
        )
    }

    /// Stable snake-case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidOptions(_) => "invalid_options",
            Error::NonFinite(_) => "non_finite",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::NotInCone { .. } => "not_in_cone",
            Error::NotAMaximizer(_) => "not_a_maximizer",
            Error::Unclassified(_) => "unclassified",
            Error::DomainTruncation { .. } => "domain_truncation",
            Error::NotUnitSpeed(_) => "not_unit_speed",
            Error::LeftCone(_) => "left_cone",
            Error::Collapsed(_) => "collapsed",
            Error::NoConvergence { .. } => "no_convergence",
            Error::StepTooLarge(_) => "step_too_large",
            Error::BlowUp(_) => "blow_up",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::Eigensolver(_) => "eigensolver",
            Error::NoThresholdNeeded(_) => "no_threshold_needed",
            Error::Inconclusive { .. } => "inconclusive",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
