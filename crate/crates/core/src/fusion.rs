//! Score normalization, weighted fusion of the two streams, and the
//! sampling-distribution update.

use serde::{Deserialize, Serialize};

use crate::config::Normalization;
use crate::error::{Error, Result};
use crate::interp::Interpolant;
use crate::state::ScoreState;

/// Range that interpolated (unvisited) scores are clipped to.
pub const INTERPOLATION_CLIP: (f64, f64) = (-1.0, 3.0);

/// Mean and population standard deviation of a stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamStats {
    pub mean: f64,
    pub std: f64,
}

impl StreamStats {
    pub fn of(stream: &[f64]) -> Self {
        if stream.is_empty() {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        // exact for constant streams, where summation rounding would leave a tiny residue
        if stream.iter().all(|&x| x == stream[0]) {
            return Self {
                mean: stream[0],
                std: 0.0,
            };
        }
        let n = stream.len() as f64;
        let mean = stream.iter().sum::<f64>() / n;
        let var = stream.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }

    pub fn z(&self, x: f64, epsilon: f64) -> f64 {
        (x - self.mean) / (self.std + epsilon)
    }
}

/// `(x - mean) / (std + epsilon)` over the whole stream.
pub fn znorm(stream: &[f64], epsilon: f64) -> Vec<f64> {
    let stats = StreamStats::of(stream);
    stream.iter().map(|&x| stats.z(x, epsilon)).collect()
}

/// Rescale to `[0, 1]`; a constant stream maps to zeros.
pub fn minmax(stream: &[f64]) -> Vec<f64> {
    let lo = stream.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = stream.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    stream
        .iter()
        .map(|&x| if range > 0.0 { (x - lo) / range } else { 0.0 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedScores {
    pub values: Vec<f64>,
    pub text_weight_used: f64,
}

/// Weighted sum of the z-normalized streams:
/// `w * znorm(text) + (1 - w) * znorm(object)`.
pub fn fuse(text: &[f64], object: &[f64], text_weight: f64, epsilon: f64) -> Result<FusedScores> {
    if text.len() != object.len() {
        return Err(Error::InvalidInput(format!(
            "stream lengths differ: text {} vs object {}",
            text.len(),
            object.len()
        )));
    }
    if !(0.0..=1.0).contains(&text_weight) {
        return Err(Error::InvalidInput(format!(
            "text weight {text_weight} outside [0, 1]"
        )));
    }
    let zt = znorm(text, epsilon);
    let zo = znorm(object, epsilon);
    Ok(FusedScores {
        values: combine(&zt, &zo, text_weight),
        text_weight_used: text_weight,
    })
}

fn combine(text: &[f64], object: &[f64], text_weight: f64) -> Vec<f64> {
    text.iter()
        .zip(object)
        .map(|(t, o)| weighted(*t, *o, text_weight))
        .collect()
}

fn weighted(text: f64, object: f64, text_weight: f64) -> f64 {
    // `+ 0.0` folds a negative zero from `0 * negative` into +0
    text_weight * text + (1.0 - text_weight) * object + 0.0
}

/// Normalized full-timeline text stream, computed once per run.
#[derive(Debug, Clone)]
pub struct NormalizedText(Vec<f64>);

impl NormalizedText {
    pub fn new(text_scores: &[f64], mode: Normalization, epsilon: f64) -> Self {
        Self(match mode {
            Normalization::Zscore => znorm(text_scores, epsilon),
            Normalization::Minmax => minmax(&znorm(text_scores, epsilon)),
        })
    }

    pub fn at(&self, frame: usize) -> f64 {
        self.0[frame]
    }
}

/// Fused scores for newly examined frames.
///
/// The text stream is normalized over the full timeline. The object stream
/// is only observed at visited frames, so its statistics come from every
/// visited frame including `batch`; `state.object_scores` must already hold
/// the batch's object scores and `state.visited` must include the batch.
pub fn fuse_batch(
    state: &ScoreState,
    text: &NormalizedText,
    batch: &[usize],
    text_weight: f64,
    mode: Normalization,
    epsilon: f64,
) -> Vec<(usize, f64)> {
    let observed = state.visited_object_scores();
    let stats = StreamStats::of(&observed);
    let (lo, hi) = observed
        .iter()
        .map(|&x| stats.z(x, epsilon))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let object_norm = |f: usize| -> f64 {
        let z = stats.z(state.object_scores[f], epsilon);
        match mode {
            Normalization::Zscore => z,
            Normalization::Minmax if hi > lo => (z - lo) / (hi - lo),
            Normalization::Minmax => 0.0,
        }
    };
    batch
        .iter()
        .map(|&f| (f, weighted(text.at(f), object_norm(f), text_weight)))
        .collect()
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Record scores for newly examined frames and mark them visited.
pub fn assign_scores(state: &mut ScoreState, newly_scored: &[(usize, f64)]) -> Result<()> {
    let n = state.frame_count();
    let mut seen = std::collections::HashSet::new();
    for &(f, score) in newly_scored {
        if f >= n {
            return Err(Error::InvalidInput(format!("frame {f} outside 0..{n}")));
        }
        if !score.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite score for frame {f}"
            )));
        }
        if !seen.insert(f) {
            log::warn!("frame {f} scored twice in one update; keeping the last score");
        }
        state.fused_scores[f] = score;
        state.visited.insert(f);
    }
    Ok(())
}

/// Rebuild the sampling distribution from the visited scores.
///
/// Unvisited frames are interpolated through the visited (frame, score)
/// pairs and clipped to [`INTERPOLATION_CLIP`]; visited frames keep their
/// stored score. Every value is then floored at `1/N`, passed through the
/// logistic function and normalized.
pub fn refresh_distribution(state: &mut ScoreState) -> Result<()> {
    let n = state.frame_count();
    if state.visited.is_empty() {
        return Err(Error::InvalidState(
            "no visited frames to interpolate from".into(),
        ));
    }
    let xs: Vec<f64> = state.visited.iter().map(|&f| f as f64).collect();
    let ys: Vec<f64> = state
        .visited
        .iter()
        .map(|&f| state.fused_scores[f])
        .collect();
    let curve = Interpolant::new(xs, ys)?.eval_grid(n);

    let floor = 1.0 / n as f64;
    let (clip_lo, clip_hi) = INTERPOLATION_CLIP;
    let weights: Vec<f64> = curve
        .into_iter()
        .enumerate()
        .map(|(f, interpolated)| {
            let s = if state.visited.contains(&f) {
                state.fused_scores[f]
            } else {
                interpolated.clamp(clip_lo, clip_hi)
            };
            logistic(s.max(floor))
        })
        .collect();
    let total: f64 = weights.iter().sum();
    state.distribution = weights.into_iter().map(|w| w / total).collect();
    Ok(())
}

/// Assign the new scores, then rebuild the distribution.
pub fn update_distribution(state: &mut ScoreState, newly_scored: &[(usize, f64)]) -> Result<()> {
    assign_scores(state, newly_scored)?;
    refresh_distribution(state)
}
