//! Structured normal means: hypothesis families, exponentiated distance bounds on
//! minimax risk, maximum-likelihood decoding, Monte Carlo risk estimation, and
//! sensing-energy design.

pub mod adaptive;
pub mod cbm;
pub mod combinatorics;
pub mod design;
pub mod edf;
pub mod error;
pub mod family;
pub mod graph;
pub mod invariance;
pub mod risk;
pub mod sampling;
pub mod zoo;

use serde::{Deserialize, Serialize};

pub use edf::{edf, sedf, EdfReport};
pub use error::{Result, SnmError};
pub use family::{DistanceSpectrum, Family, FamilyKind, PermutationSet};
pub use graph::{BarabasiAlbert, Graph};
pub use sampling::{mle_decode, sample_observation, DesignStrategy, Observation, RngHandle, Sensing};

/// Outcome of a certificate or diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
