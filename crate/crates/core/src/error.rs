use alloc::string::String;

/// Errors raised by parameter validation and the evaluators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar argument fell outside the domain of a function.
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// A model parameter failed validation. `field` names the offending entry,
    /// e.g. `thetas[2]` or `probs[1][0]`.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// The nested-sum forms cost `O((x+1)^d)` and are capped in dimension.
    #[error("dimension {dim} exceeds the nested-sum cap {cap}; use the breakpoint-integral form")]
    DimensionTooLarge { dim: usize, cap: usize },

    /// A brute-force lattice would exceed the enumeration budget.
    #[error("lattice has {points} points, more than the limit {limit}")]
    LatticeTooLarge { points: f64, limit: f64 },

    /// The requested asymptotic regime does not apply to the given model.
    #[error("regime not applicable: {0}")]
    InvalidRegime(String),

    /// A rate-sequence expression could not be parsed.
    #[error("cannot parse rate sequence `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.into(),
        reason: reason.into(),
    }
}
