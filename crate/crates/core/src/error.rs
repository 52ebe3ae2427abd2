use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A constructor or parser rejected its input. `field` names the
    /// offending location, e.g. `values[1][0]` or `profile[0][1][2].prob`.
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },

    #[error("index out of range: {what} {index} (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("profile shape {got_rows}x{got_cols} does not match instance {n}x{m}")]
    ShapeMismatch {
        n: usize,
        m: usize,
        got_rows: usize,
        got_cols: usize,
    },

    #[error("joint competitor support in auction {auction} has {size} outcomes, cap is {cap}")]
    EnumerationCap {
        auction: usize,
        size: u128,
        cap: u128,
    },

    #[error("bidder {bidder} is a {actual} maximizer, operation needs a {expected} maximizer")]
    WrongKind {
        bidder: usize,
        expected: &'static str,
        actual: &'static str,
    },

    #[error(
        "value maximizer {bidder} violates its ROI constraint: slack {slack:.3e} < -{epsilon:.3e}"
    )]
    InfeasibleProfile {
        bidder: usize,
        slack: f64,
        epsilon: f64,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}
