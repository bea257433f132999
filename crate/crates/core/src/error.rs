use std::path::PathBuf;
use thiserror::Error;

/// Errors produced by the library. The CLI maps these onto exit codes:
/// parse/format errors → 2, undefined metrics → 3, numerical failures → 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("metric {metric} is undefined: {reason}")]
    UndefinedMetric {
        metric: &'static str,
        reason: String,
    },

    #[error("random-walk aggregation undefined for zero-degree nodes {}{}",
        format_nodes(.nodes), if .nodes.len() < *.total { " (truncated)" } else { "" })]
    DegenerateNodes { nodes: Vec<u32>, total: usize },

    #[error("accuracy target {target:e} not reached (achieved bound {achieved:e})")]
    Accuracy { achieved: f64, target: f64 },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("classifier failed in round {round}: {msg}")]
    Classifier { round: usize, msg: String },
}

fn format_nodes(nodes: &[u32]) -> String {
    let shown: Vec<String> = nodes.iter().take(8).map(|n| n.to_string()).collect();
    shown.join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
