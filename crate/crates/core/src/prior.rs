//! Prior distributions over the solution location.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rng;

/// Absolute tolerance on `sum(weights) == 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A normalized probability vector over item indices `0..n`.
///
/// Item order is whatever the caller supplied; nothing here sorts the
/// weights in place.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    weights: Vec<f64>,
}

#[derive(Deserialize)]
struct PriorFile {
    weights: Vec<f64>,
}

impl Prior {
    /// Normalizes `raw` to sum to one.
    pub fn new(raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("prior needs at least one weight"));
        }
        if let Some((i, w)) = raw.iter().enumerate().find(|(_, w)| !w.is_finite()) {
            return Err(Error::invalid(format!("weight {i} is not finite ({w})")));
        }
        if let Some((i, w)) = raw.iter().enumerate().find(|(_, w)| **w < 0.0) {
            return Err(Error::invalid(format!("weight {i} is negative ({w})")));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        let weights = raw.iter().map(|w| w / total).collect();
        Ok(Prior { weights })
    }

    /// `n` i.i.d. Uniform(0,1) weights from the seeded stream, normalized.
    pub fn sample(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("cannot sample a prior over zero items"));
        }
        let mut rng = rng::stream(seed);
        // gen::<f64>() lies in [0, 1); the all-zero draw is not reachable in
        // practice but would be rejected by `new`.
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        Prior::new(&raw)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Prior::new(&vec![1.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Total variation style L1 distance `sum |p_i - p_hat_i|`, in `[0, 2]`.
    pub fn l1_distance(&self, other: &Prior) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum())
    }

    /// Indices sorted by weight, largest first. Ties keep the lower index
    /// first.
    pub fn ranked_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.weights[b]
                .partial_cmp(&self.weights[a])
                .expect("weights are finite")
                .then(a.cmp(&b))
        });
        idx
    }

    /// Sum of the `k` largest weights: the best a classical search can do
    /// with `k` queries.
    pub fn top_k_mass(&self, k: usize) -> Result<f64> {
        if k > self.len() {
            return Err(Error::invalid(format!(
                "k = {k} exceeds item count {}",
                self.len()
            )));
        }
        if k == self.len() {
            return Ok(1.0);
        }
        Ok(self
            .ranked_indices()
            .into_iter()
            .take(k)
            .map(|i| self.weights[i])
            .sum())
    }

    /// Index of the largest weight, lowest index on ties.
    pub fn argmax(&self) -> usize {
        self.ranked_indices()[0]
    }

    /// Number of items with strictly positive weight.
    pub fn support_size(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// Parses `{"weights": [...]}` and normalizes.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PriorFile = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("bad prior JSON: {e}")))?;
        Prior::new(&file.weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
        Prior::from_json_str(&text)
    }

    /// `{"weights": [...]}` with every weight written to 17 significant
    /// digits.
    pub fn to_json_string(&self) -> String {
        let body: Vec<String> = self.weights.iter().map(|w| format!("{w:.16e}")).collect();
        format!("{{\"weights\": [{}]}}\n", body.join(", "))
    }
}
