use std::fmt;

use serde::{Deserialize, Serialize};

/// One applied reduction: the event that fired and the outcome label it produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub event: usize,
    pub outcome: usize,
}

/// The sequence of reductions that annihilated a local state.
///
/// The last link is the one whose operator sent the squared norm below
/// [`crate::linalg::EPS_ZERO`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroNormChain {
    /// Event whose local state was being built, if any.
    pub target: Option<usize>,
    pub chain: Vec<ChainLink>,
    pub norm_sq: f64,
}

impl fmt::Display for ZeroNormChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "local state annihilated (norm^2 = {:e})", self.norm_sq)?;
        if let Some(t) = self.target {
            write!(f, " while preparing event {t}")?;
        }
        write!(f, "; chain:")?;
        for link in &self.chain {
            write!(f, " e{}->{}", link.event, link.outcome)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0}")]
    ZeroNormState(Box<ZeroNormChain>),

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("enumeration budget exceeded: {tuples} outcome tuples > limit {limit}")]
    Budget { tuples: f64, limit: u64 },

    #[error("{path}: {message}")]
    Validation { path: String, message: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
