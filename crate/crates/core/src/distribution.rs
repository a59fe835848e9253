use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Allowed deviation of a stored distribution's total from 1.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Inputs whose total is within this window of 1 are renormalized on
/// construction; anything further off is rejected.
pub const RENORMALIZE_WINDOW: f64 = 1e-9;

/// Normalized probability vector over an indexed finite domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for FiniteDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        FiniteDistribution::new(probs)
    }
}

impl From<FiniteDistribution> for Vec<f64> {
    fn from(d: FiniteDistribution) -> Self {
        d.probs
    }
}

impl FiniteDistribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Distribution("empty probability vector".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::Distribution(format!(
                "entry {i} is {p}; probabilities must be finite and non-negative"
            )));
        }
        let total = compensated_sum(probs.iter().copied());
        let gap = (total - 1.0).abs();
        if gap > RENORMALIZE_WINDOW {
            return Err(Error::Distribution(format!(
                "entries sum to {total}, not 1"
            )));
        }
        if gap > SUM_TOLERANCE {
            for p in &mut probs {
                *p /= total;
            }
        }
        Ok(FiniteDistribution { probs })
    }

    /// Normalizes non-negative weights with a positive total.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Distribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::Distribution("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }
}
