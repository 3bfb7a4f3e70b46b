//! Crate-wide error type.
//!
//! Numerical refusals are deliberately loud: a window that truncates support,
//! a solver that cannot certify its residual, or a scan that cannot classify a
//! sign change all surface as errors instead of silently degraded output.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Masses plus component weights do not sum to 1 within 1e-9.
    #[error("atom masses and component weights sum to {total}, not 1 (tolerance 1e-9)")]
    NonUnitMass { total: f64 },

    #[error("duplicate atom position {position}")]
    DuplicateAtom { position: f64 },

    #[error("tabulated grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },

    /// Catch-all for structurally invalid measure literals (empty measure,
    /// non-positive mass, bad family parameters, ...).
    #[error("invalid measure: {reason}")]
    InvalidMeasure { reason: String },

    #[error("transform evaluated on a singularity at x = {x}")]
    EvaluationOnSingularity { x: f64 },

    #[error("Cauchy transform vanishes at z = {re} + {im}i; F is undefined there")]
    ZeroCauchyTransform { re: f64, im: f64 },

    /// A component lacks the requested moment (e.g. any moment of a Cauchy part).
    #[error("moment of order {order} does not exist for this measure")]
    HeavyTail { order: usize },

    #[error("quadrature failed to reach the requested tolerance ({detail})")]
    QuadratureFailure { detail: String },

    /// Stieltjes-inversion extrapolants failed to settle; a singular part is
    /// likely present at the reported abscissa.
    #[error("Stieltjes inversion did not converge at x = {x} (spread {spread:.3e})")]
    NonConvergent { x: f64, spread: f64 },

    /// `Im H_p` on the boundary curve exceeded its certificate bound; the
    /// boundary-function solve cannot be trusted at this point.
    #[error("boundary residual {residual:.3e} at x = {x} exceeds 1e-8")]
    ResidualTooLarge { x: f64, residual: f64 },

    #[error("subordination iteration exhausted its budget at z = {re} + {im}i (residual {residual:.3e})")]
    NoConvergence { re: f64, im: f64, residual: f64 },

    /// The boundary function is still positive at a scan-window endpoint, so
    /// the window truncates support.
    #[error("window too small: boundary function positive at window endpoint {boundary}")]
    WindowTooSmall { boundary: f64 },

    /// The requested (p, q) lies outside the freely infinitely divisible
    /// regime q <= (p-1)/p, where no transform formula is available.
    #[error("(p, q) = ({p}, {q}) is outside the regime q <= 1/p* required here")]
    RegimeError { p: f64, q: f64 },

    #[error("input must be centered; mean is {mean:.3e}")]
    NonCenteredInput { mean: f64 },

    /// Requested free convolution power does not exist (or could not be
    /// certified to exist) for this measure.
    #[error("free power not defined: {reason}")]
    NotDefined { reason: String },

    /// Sign-change cells of an atom scan where the derivative limit diverged;
    /// reported rather than silently dropped.
    #[error("atom scan inconclusive on {n} cell(s); first cell ({lo}, {hi})",
            n = cells.len(), lo = cells[0].0, hi = cells[0].1)]
    ScanInconclusive { cells: Vec<(f64, f64)> },

    /// Component counts increased along increasing p. This falsifies either
    /// the solver or the preconditions, so it is a hard error carrying the
    /// offending boundary-function curves.
    #[error("component count is not non-increasing over p = {p_values:?}: counts {counts:?}")]
    MonotonicityViolation {
        p_values: Vec<f64>,
        counts: Vec<usize>,
        /// (p, sampled (x, f_p(x)) curve) per requested p, for post-mortems.
        fp_curves: Vec<(f64, Vec<(f64, f64)>)>,
    },

    #[error("infinite-divisibility diagnostic `{check}` failed: lhs = {lhs:.6e} vs bound {rhs:.6e} at z1 = {z1:?}, z2 = {z2:?}")]
    DiagnosticFailure {
        check: &'static str,
        z1: (f64, f64),
        z2: (f64, f64),
        lhs: f64,
        rhs: f64,
    },

    #[error("invalid parameter: {what}")]
    InvalidParam { what: String },
}

impl Error {
    pub fn invalid_measure(reason: impl Into<String>) -> Self {
        Error::InvalidMeasure { reason: reason.into() }
    }

    pub fn invalid_param(what: impl Into<String>) -> Self {
        Error::InvalidParam { what: what.into() }
    }

    pub fn not_defined(reason: impl Into<String>) -> Self {
        Error::NotDefined { reason: reason.into() }
    }
}
