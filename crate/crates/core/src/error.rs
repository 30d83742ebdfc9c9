use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} {value} out of range (limit {limit})")]
    Range {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("batch element {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("checksum mismatch in {what}: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum {
        what: &'static str,
        stored: u32,
        computed: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn in_batch(self, index: usize) -> Self {
        Error::Batch {
            index,
            source: Box::new(self),
        }
    }
}
