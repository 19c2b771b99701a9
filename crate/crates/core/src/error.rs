use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure in {context}: {detail}")]
    Numerical { context: String, detail: String },

    /// A failure raised while processing one population member.
    #[error("individual {id}: {source}")]
    Individual {
        id: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("IDX format error at byte offset {offset}: {detail}")]
    Format { offset: usize, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("test partition accessed more than once for method `{method}` (seed {seed})")]
    TestAccess { method: String, seed: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numerical {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn for_individual(id: usize, source: Error) -> Self {
        Error::Individual {
            id,
            source: Box::new(source),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
