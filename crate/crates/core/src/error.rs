use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {context}: {message}")]
    Domain {
        context: &'static str,
        message: String,
    },

    #[error("corrupt dataset: {0}")]
    CorruptDataset(String),

    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    #[error("degenerate proposal: {0}")]
    DegenerateProposal(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unbounded density ratio at theta = {theta}: target density {target:e} but proposal density is zero")]
    UnboundedRatio { theta: f64, target: f64 },

    #[error("undefined variance: {0}")]
    UndefinedVariance(String),

    #[error("config error at line {line}, key `{key}`: {message}")]
    Parse {
        key: String,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(context: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            context,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
