//! Error types shared across the crate.

/// Errors produced by distribution construction, heralding analysis,
/// optimization and detector-data processing.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A scalar argument violated its domain constraint.
    #[error("invalid {name} = {value}: must satisfy {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Structurally invalid input (wrong length, ordering, emptiness, ...).
    #[error("{0}")]
    InvalidInput(String),

    /// Vacuum probabilities too close together for the alternating-sum
    /// closed form; the phase-type engine handles these inputs.
    #[error(
        "vacuum probabilities nearly degenerate (min gap {min_gap:e} < {threshold:e}); \
         use phase_type_pmf instead"
    )]
    NearDegenerate { min_gap: f64, threshold: f64 },

    /// A truncated table left more probability mass outside than allowed.
    #[error(
        "truncation at {n_trunc} leaves tail mass {tail:e} >= {budget:e}; \
         suggested n_trunc >= {suggested}"
    )]
    Truncation {
        n_trunc: usize,
        tail: f64,
        budget: f64,
        suggested: usize,
    },

    /// Heralding probability below the representable floor; conditional
    /// quantities are undefined.
    #[error("heralding probability {herald_prob:e} below {floor:e}; fidelity undefined")]
    UndefinedFidelity { herald_prob: f64, floor: f64 },

    /// Requested target exceeds the achievable maximum.
    #[error("target {target:e} exceeds achievable maximum {max:e}")]
    Unachievable { target: f64, max: f64 },

    /// An iterative routine exhausted its budget. The bracket records the
    /// final search state.
    #[error("{context}: no convergence within {iterations} iterations (bracket [{lo}, {hi}])")]
    NoConvergence {
        context: String,
        iterations: usize,
        lo: f64,
        hi: f64,
    },

    /// Dataset cannot constrain the requested parameters.
    #[error("fit under-determined: {0}")]
    UnderDetermined(String),

    /// Gaussian mixture fit failed.
    #[error("mixture fit failed: {0}")]
    MixtureFit(String),

    /// Time series too short for the requested block size.
    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks a scalar against a closed-interval domain, producing a uniform
/// error message.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    constraint: &'static str,
) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint,
        })
    }
}
