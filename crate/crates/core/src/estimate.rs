//! Probability estimates with their sampling error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Estimate of a probability, either a Monte-Carlo frequency or an exact
/// value (`exact = true`, zero standard error).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub hits: u64,
    pub trials: u64,
    pub standard_error: f64,
    pub seed: u64,
    pub exact: bool,
}

impl McEstimate {
    pub fn from_counts(hits: u64, trials: u64, seed: u64) -> Self {
        let p = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        McEstimate {
            value: p,
            hits,
            trials,
            standard_error: binomial_se(p, trials),
            seed,
            exact: false,
        }
    }

    pub fn exact(value: f64) -> Self {
        McEstimate {
            value: value.clamp(0.0, 1.0),
            hits: 0,
            trials: 0,
            standard_error: 0.0,
            seed: 0,
            exact: true,
        }
    }

    /// Pools the counts of two Monte-Carlo runs of the same event.
    pub fn merge(&self, other: &McEstimate) -> Result<McEstimate> {
        if self.exact || other.exact {
            return Err(Error::Domain("exact estimates carry no counts to pool".into()));
        }
        Ok(McEstimate::from_counts(self.hits + other.hits, self.trials + other.trials, self.seed))
    }
}

/// `√(p(1-p)/T)`, zero for `T = 0`.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        0.0
    } else {
        (p * (1.0 - p) / trials as f64).max(0.0).sqrt()
    }
}
