use thiserror::Error;

use crate::expr::ExprError;

/// Errors of the experiment runner.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The spec does not validate; `path` locates the field, e.g.
    /// `parameters.window`.
    #[error("invalid spec at `{path}`: {message}")]
    Spec { path: String, message: String },

    #[error("invalid expression in `{path}`: {source}")]
    Expr {
        path: String,
        #[source]
        source: ExprError,
    },

    /// A library call failed; the spec is echoed so the failure can be
    /// reproduced.
    #[error("{source}\nspec: {spec}")]
    Run {
        spec: String,
        #[source]
        source: ppt_core::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub(crate) fn spec(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Spec {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
