//! Error taxonomy shared by the library and the CLI.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of the solvers and verification routines.
///
/// Numerical routines return errors instead of silently degrading: a grid
/// that cannot resolve the wall layer, a truncated integral whose tail is
/// not negligible, or an iteration that leaves its invariant ball all
/// surface here.
#[derive(Debug, Error)]
pub enum Error {
    /// The graded grid does not place enough nodes inside the wall layer.
    #[error("grid grading insufficient: {got} nodes in [1, 1 + {layer_width:.3e}], need {need}")]
    GradingInsufficient {
        /// Nodes found inside the layer.
        got: usize,
        /// Required minimum.
        need: usize,
        /// Width of the layer that must be resolved.
        layer_width: f64,
    },

    /// A half-line integral was truncated at `R_max` but the integrand has
    /// not decayed there, and no stable power-law tail could be fitted.
    #[error("integrand tail not negligible at R_max = {r_max}: {detail}")]
    TailNotNegligible {
        /// Outer radius of the grid.
        r_max: f64,
        /// What went wrong with the tail treatment.
        detail: String,
    },

    /// Mode data violates the conjugate symmetry `g_{-n} = conj(g_n)`
    /// required for a real physical field.
    #[error("conjugate symmetry violated at mode {n}: mismatch {mismatch:.3e}")]
    SymmetryViolation {
        /// Offending mode index.
        n: i32,
        /// Size of the violation relative to the field size.
        mismatch: f64,
    },

    /// An operation that requires `n != 0` (or `alpha * n != 0`) received a
    /// degenerate mode.
    #[error("operation undefined for mode n = 0 (or alpha*n = 0): {context}")]
    ZeroMode {
        /// Operation that was attempted.
        context: String,
    },

    /// Parameters left the regime a routine is designed for.
    #[error("regime violation: {detail}")]
    RegimeViolation {
        /// Which requirement failed.
        detail: String,
    },

    /// The axisymmetric forcing decays too slowly for the quadrature
    /// solution to exist.
    #[error("forcing not integrable: fitted tail exponent {exponent:.3} <= {required:.3}")]
    NotIntegrable {
        /// Fitted decay exponent of the forcing.
        exponent: f64,
        /// Minimal exponent required.
        required: f64,
    },

    /// A banded factorization hit an exactly zero pivot.
    #[error("singular linear system: zero pivot at column {column}")]
    SingularSystem {
        /// Column at which factorization broke down.
        column: usize,
    },

    /// The wall-corrector boundary system degenerated: the layer profile
    /// cannot absorb the residual slip.
    #[error("degenerate corrector: |denominator| = {denom:.3e} below {floor:.3e}")]
    DegenerateCorrector {
        /// Magnitude of the corrector denominator.
        denom: f64,
        /// Rejection threshold.
        floor: f64,
    },

    /// The quadratic interaction pushed significant mass beyond the mode
    /// cutoff.
    #[error("mode overflow: dropped convolution mass {dropped:.3e} exceeds {allowed:.3e}")]
    ModeOverflow {
        /// Norm of the truncated contributions.
        dropped: f64,
        /// Largest acceptable truncated norm.
        allowed: f64,
    },

    /// Picard iteration failed to contract.
    #[error("no contraction after {iterations} iterations: last update ratio {ratio:.3}")]
    NoContraction {
        /// Iterations performed.
        iterations: usize,
        /// Last observed update ratio.
        ratio: f64,
    },

    /// An iterate left the invariant ball.
    #[error("iterate left the invariant ball at iteration {iteration}: norm {norm:.3e} > threshold {threshold:.3e} (component {component})")]
    BallExit {
        /// Iteration at which the exit occurred.
        iteration: usize,
        /// Offending norm component (0..4).
        component: usize,
        /// Value of that component.
        norm: f64,
        /// Ball threshold for it.
        threshold: f64,
    },

    /// A least-squares fit (decay exponent, scaling slope) was too poorly
    /// conditioned to trust.
    #[error("fit unstable: {detail}")]
    FitUnstable {
        /// Diagnostic for the failed fit.
        detail: String,
    },

    /// A solve finished but its momentum residual exceeded the gate,
    /// so the output cannot be trusted at the requested accuracy.
    #[error("mode {n}: momentum residual {residual:.3e} exceeds gate {tol:.3e}")]
    ResidualGate {
        /// Mode whose residual failed.
        n: i32,
        /// Measured relative residual.
        residual: f64,
        /// Gate it had to stay below.
        tol: f64,
    },

    /// A per-mode solve failed inside a multi-mode run; carries the mode
    /// index alongside the underlying failure.
    #[error("mode {n} failed: {source}")]
    ModeFailed {
        /// Mode that failed.
        n: i32,
        /// Underlying failure.
        #[source]
        source: Box<Error>,
    },

    /// Invalid configuration or argument values.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// CSV write failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable kind tag, used by the CLI error channel.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::GradingInsufficient { .. } => "grading_insufficient",
            Error::TailNotNegligible { .. } => "tail_not_negligible",
            Error::SymmetryViolation { .. } => "symmetry_violation",
            Error::ZeroMode { .. } => "zero_mode",
            Error::RegimeViolation { .. } => "regime_violation",
            Error::NotIntegrable { .. } => "not_integrable",
            Error::SingularSystem { .. } => "singular_system",
            Error::DegenerateCorrector { .. } => "degenerate_corrector",
            Error::ModeOverflow { .. } => "mode_overflow",
            Error::NoContraction { .. } => "no_contraction",
            Error::BallExit { .. } => "ball_exit",
            Error::FitUnstable { .. } => "fit_unstable",
            Error::ResidualGate { .. } => "residual_gate",
            Error::ModeFailed { source, .. } => source.kind(),
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// CLI exit code for this error.
    ///
    /// `2` for configuration problems, `3` for iteration failures
    /// (no contraction / ball exit), `5` for any other numerical or I/O
    /// failure. Exit code `4` is reserved for failed verification gates.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NoContraction { .. } | Error::BallExit { .. } => 3,
            Error::ModeFailed { source, .. } => source.exit_code(),
            _ => 5,
        }
    }
}
