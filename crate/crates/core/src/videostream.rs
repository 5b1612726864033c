//! Video-search stream: weighted frame sampling in grid-sized batches,
//! detector calls, and per-frame object scores.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BackendError, Error, Result};
use crate::targets::SemanticTargets;

/// Frames sent to the detector in one call. `grid_side²` is the nominal size;
/// `partial` is set when fewer unvisited frames were left.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameBatch {
    pub indices: Vec<usize>,
    pub grid_side: usize,
    pub partial: bool,
}

impl FrameBatch {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: usize,
    #[serde(rename = "name")]
    pub object_name: String,
    pub confidence: f64,
}

impl Detection {
    pub fn new(frame: usize, object_name: impl Into<String>, confidence: f64) -> Self {
        Self {
            frame,
            object_name: object_name.into(),
            confidence,
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.object_name.is_empty() && (0.0..=1.0).contains(&self.confidence)
    }
}

/// Open-vocabulary detector. Implementations should only report frames from
/// the request and names from the vocabulary.
pub trait Detector {
    fn detect(
        &mut self,
        frames: &[usize],
        vocabulary: &[String],
    ) -> Result<Vec<Detection>, BackendError>;
}

impl<T: Detector + ?Sized> Detector for Box<T> {
    fn detect(
        &mut self,
        frames: &[usize],
        vocabulary: &[String],
    ) -> Result<Vec<Detection>, BackendError> {
        (**self).detect(frames, vocabulary)
    }
}

/// Produces target and cue objects for a query. `k` is passed through
/// uninterpreted.
pub trait TargetPlanner {
    fn plan(&mut self, query: &str, k: usize) -> Result<SemanticTargets, BackendError>;
}

impl<T: TargetPlanner + ?Sized> TargetPlanner for Box<T> {
    fn plan(&mut self, query: &str, k: usize) -> Result<SemanticTargets, BackendError> {
        (**self).plan(query, k)
    }
}

/// Side of the sampling grid for the remaining budget: `floor(sqrt(remaining))`
/// capped at `max_grid_side`, never below 1.
pub fn grid_side(remaining_budget: usize, max_grid_side: usize) -> usize {
    remaining_budget.isqrt().min(max_grid_side).max(1)
}

/// Draw one grid batch without replacement from the unvisited frames.
///
/// The batch holds `m²` frames with `m = grid_side(remaining_budget,
/// max_grid_side)`, or every unvisited frame if fewer remain. Each draw is
/// proportional to `distribution` renormalized over the frames still
/// eligible. Implemented with exponential race keys (Efraimidis and
/// Spirakis): every eligible frame gets `-ln(u) / p` and the smallest keys
/// win, which has the same law as sequential draws.
pub fn sample_frames<R: Rng + ?Sized>(
    distribution: &[f64],
    remaining_budget: usize,
    visited: &BTreeSet<usize>,
    max_grid_side: usize,
    rng: &mut R,
) -> FrameBatch {
    let grid_side = grid_side(remaining_budget, max_grid_side);
    let want = grid_side * grid_side;
    let mut keyed: Vec<(f64, usize)> = distribution
        .iter()
        .enumerate()
        .filter(|(f, _)| !visited.contains(f))
        .map(|(f, &p)| {
            let u: f64 = rng.random();
            // u in [0, 1); 1 - u in (0, 1] keeps the log finite
            let key = -(1.0 - u).ln() / p.max(f64::MIN_POSITIVE);
            (key, f)
        })
        .collect();
    let partial = keyed.len() < want;
    if !partial && want > 0 {
        keyed.select_nth_unstable_by(want - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keyed.truncate(want);
    }
    let mut indices: Vec<usize> = keyed.into_iter().map(|(_, f)| f).collect();
    indices.sort_unstable();
    FrameBatch {
        indices,
        grid_side,
        partial,
    }
}

/// Object score per batch frame: the best `confidence * weight` over
/// detections whose name is a target or cue. Frames without a matching
/// detection score 0. Detections outside the batch or vocabulary are ignored.
pub fn score_objects(
    detections: &[Detection],
    targets: &SemanticTargets,
    batch: &FrameBatch,
) -> Vec<(usize, f64)> {
    let in_batch: HashSet<usize> = batch.indices.iter().copied().collect();
    let mut best: HashMap<usize, f64> = HashMap::new();
    for det in detections {
        if !in_batch.contains(&det.frame) {
            log::warn!(
                "detector reported frame {} outside the requested batch",
                det.frame
            );
            continue;
        }
        let Some(weight) = targets.weight_of(&det.object_name) else {
            log::warn!(
                "detector reported `{}` outside the vocabulary",
                det.object_name
            );
            continue;
        };
        if !det.is_valid() {
            log::warn!("dropping detection with confidence {}", det.confidence);
            continue;
        }
        let score = det.confidence * weight;
        let slot = best.entry(det.frame).or_insert(0.0);
        if score > *slot {
            *slot = score;
        }
    }
    batch
        .indices
        .iter()
        .map(|&f| (f, best.get(&f).copied().unwrap_or(0.0)))
        .collect()
}

/// Best confidence seen so far for each object name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FoundLog(BTreeMap<String, f64>);

impl FoundLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, name: &str, confidence: f64) {
        let slot = self.0.entry(name.to_string()).or_insert(f64::NEG_INFINITY);
        if confidence > *slot {
            *slot = confidence;
        }
    }

    pub fn record_all(&mut self, detections: &[Detection], targets: &SemanticTargets) {
        for det in detections {
            if det.is_valid() && targets.weight_of(&det.object_name).is_some() {
                self.record(&det.object_name, det.confidence);
            }
        }
    }

    pub fn best(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// True once every target (cues excluded) has a detection at confidence
/// `>= threshold`.
pub fn check_all_found(found: &FoundLog, targets: &SemanticTargets, threshold: f64) -> bool {
    targets
        .targets()
        .iter()
        .all(|t| found.best(&t.name).is_some_and(|c| c >= threshold))
}

pub fn plan_targets_from_file(path: impl AsRef<Path>) -> Result<SemanticTargets> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SemanticTargets::from_json_str(&raw)
        .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

/// Planner that returns a fixed target set regardless of the query.
#[derive(Debug, Clone)]
pub struct StaticPlanner(pub SemanticTargets);

impl StaticPlanner {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        plan_targets_from_file(path).map(Self)
    }
}

impl TargetPlanner for StaticPlanner {
    fn plan(&mut self, _query: &str, _k: usize) -> Result<SemanticTargets, BackendError> {
        Ok(self.0.clone())
    }
}

/// One entry of a scripted detector fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedDetection {
    pub name: String,
    pub confidence: f64,
}

/// Replays a fixed frame → detections map, filtered by the request.
///
/// Fixture JSON: `{"<frame>": [{"name": "...", "confidence": x}, ...], ...}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScriptedDetector {
    script: BTreeMap<usize, Vec<ScriptedDetection>>,
}

impl ScriptedDetector {
    pub fn new(script: BTreeMap<usize, Vec<ScriptedDetection>>) -> Self {
        Self { script }
    }

    pub fn from_json_str(raw: &str) -> Result<Self, BackendError> {
        let det: Self =
            serde_json::from_str(raw).map_err(|e| BackendError::Fixture(e.to_string()))?;
        for (frame, list) in &det.script {
            for d in list {
                if d.name.is_empty() || !(0.0..=1.0).contains(&d.confidence) {
                    return Err(BackendError::Fixture(format!(
                        "frame {frame}: invalid detection {:?} (confidence must lie in [0, 1])",
                        d.name
                    )));
                }
            }
        }
        Ok(det)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, BackendError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&raw)
    }

    pub fn script(&self) -> &BTreeMap<usize, Vec<ScriptedDetection>> {
        &self.script
    }

    pub fn frames_with(&self, name: &str) -> impl Iterator<Item = usize> + '_ {
        let name = name.to_string();
        self.script
            .iter()
            .filter(move |(_, dets)| dets.iter().any(|d| d.name == name))
            .map(|(&f, _)| f)
    }
}

impl Detector for ScriptedDetector {
    fn detect(
        &mut self,
        frames: &[usize],
        vocabulary: &[String],
    ) -> Result<Vec<Detection>, BackendError> {
        let vocab: HashSet<&str> = vocabulary.iter().map(String::as_str).collect();
        let mut out = Vec::new();
        for &f in frames {
            if let Some(list) = self.script.get(&f) {
                out.extend(
                    list.iter()
                        .filter(|d| vocab.contains(d.name.as_str()))
                        .map(|d| Detection::new(f, d.name.clone(), d.confidence)),
                );
            }
        }
        Ok(out)
    }
}
