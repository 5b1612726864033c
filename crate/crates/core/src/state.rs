//! Mutable per-run score state.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores and sampling distribution of one search run.
///
/// All arrays have one entry per frame. `fused_scores` holds the assigned
/// score for visited frames and 0 elsewhere; `distribution` is always a
/// strictly positive probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreState {
    pub object_scores: Vec<f64>,
    pub text_scores: Vec<f64>,
    pub fused_scores: Vec<f64>,
    pub visited: BTreeSet<usize>,
    pub distribution: Vec<f64>,
}

impl ScoreState {
    /// Fresh state with a uniform distribution.
    pub fn new(text_scores: Vec<f64>) -> Result<Self> {
        let n = text_scores.len();
        if n == 0 {
            return Err(Error::InvalidInput(
                "score state needs at least one frame".into(),
            ));
        }
        Ok(Self {
            object_scores: vec![0.0; n],
            text_scores,
            fused_scores: vec![0.0; n],
            visited: BTreeSet::new(),
            distribution: vec![1.0 / n as f64; n],
        })
    }

    pub fn frame_count(&self) -> usize {
        self.distribution.len()
    }

    pub fn is_visited(&self, frame: usize) -> bool {
        self.visited.contains(&frame)
    }

    /// Object scores of all visited frames, in frame order.
    pub fn visited_object_scores(&self) -> Vec<f64> {
        self.visited
            .iter()
            .map(|&f| self.object_scores[f])
            .collect()
    }

    /// Checks every structural invariant.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.frame_count();
        if [
            self.object_scores.len(),
            self.text_scores.len(),
            self.fused_scores.len(),
        ]
        .iter()
        .any(|&len| len != n)
        {
            return Err(Error::InvalidState("score arrays differ in length".into()));
        }
        let in_unit = |v: &f64| (0.0..=1.0).contains(v);
        if !self.object_scores.iter().all(in_unit) || !self.text_scores.iter().all(in_unit) {
            return Err(Error::InvalidState(
                "stream scores must lie in [0, 1]".into(),
            ));
        }
        if self.visited.iter().next_back().is_some_and(|&f| f >= n) {
            return Err(Error::InvalidState("visited frame out of range".into()));
        }
        let sum: f64 = self.distribution.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("distribution sums to {sum}")));
        }
        if self.distribution.iter().any(|&p| p.is_nan() || p <= 0.0) {
            return Err(Error::InvalidState(
                "distribution has a non-positive entry".into(),
            ));
        }
        Ok(())
    }
}
