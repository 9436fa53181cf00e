use thiserror::Error;

/// Errors surfaced by density construction, transforms, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or field violates its constraint; `field` names it.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// A density with no usable mass (all zero, non-finite, or delta-like).
    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    /// Two operands whose supports share no mass.
    #[error("supports do not overlap: {0}")]
    NoOverlap(String),

    /// Grids whose steps cannot be reconciled onto one lattice.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An argument outside its mathematical domain (e.g. a probability
    /// level not in (0,1)).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed configuration text; the message carries line/column.
    #[error("config syntax error: {0}")]
    ConfigSyntax(String),

    /// A configuration key that is not part of the schema.
    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
