use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A feature name or influence key that the schema does not know about.
    #[error("schema error: {0}")]
    Schema(String),

    /// Malformed input text (CSV cells, duplicate timestamps, config syntax).
    #[error("format error: {0}")]
    Format(String),

    /// A value outside its mathematical domain (negative influence, non-positive price).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("bounds error: {0}")]
    Bounds(String),

    /// Graph shape that leaves the metric undefined.
    #[error("structure error: {0}")]
    Structure(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("resource error: {what} ({count} simplices would be generated)")]
    Resource { what: String, count: u128 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
