use std::path::PathBuf;

use thiserror::Error;

use crate::game::Player;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    /// A grid case or configuration violates one of its invariants.
    #[error("invariant `{invariant}` violated: {detail}")]
    Invalid { invariant: &'static str, detail: String },

    #[error("{what} is numerically singular (condition estimate {condition:.3e})")]
    Singular { what: &'static str, condition: f64 },

    #[error("nominal instability index {delta:.6} >= 1; the operating point is already unstable")]
    UnstableNominal { delta: f64 },

    #[error(
        "{player:?} action space has {count} feasible actions, above the cap of {cap}; \
         use the bpega solver instead"
    )]
    Capacity { player: Player, count: u128, cap: u64 },

    #[error("attack has {fractional} fractional entries, above the exact-enumeration limit of {limit}")]
    SupportOverflow { fractional: usize, limit: usize },

    #[error("could not draw a stable load model {model} after {retries} redraws (sigma = {sigma})")]
    TooStressed { model: usize, retries: usize, sigma: f64 },
}

impl Error {
    pub(crate) fn invalid(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            invariant,
            detail: detail.into(),
        }
    }
}
