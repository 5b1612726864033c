//! The keyframe search loop.
//!
//! Plan targets, score the subtitle stream once, then repeatedly sample a
//! batch from the current distribution, detect, fuse and update until the
//! budget runs out, every target has been seen, or no unvisited frames
//! remain. The top-K visited frames by fused score are returned.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SearchConfig;
use crate::error::{BackendError, Error, Result};
use crate::fusion::{assign_scores, fuse_batch, refresh_distribution, NormalizedText};
use crate::state::ScoreState;
use crate::subtitle::SubtitleTrack;
use crate::targets::SemanticTargets;
use crate::textstream::{compute_text_stream, TextEncoder, TextStream};
use crate::timeline::VideoTimeline;
use crate::videostream::{
    check_all_found, sample_frames, score_objects, Detector, FoundLog, TargetPlanner,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    AllTargetsFound,
    FramesExhausted,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::AllTargetsFound => "all_targets_found",
            Termination::FramesExhausted => "frames_exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: usize,
    pub score: f64,
    pub time_s: f64,
}

/// What happened in one sampling iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub grid_side: usize,
    pub partial: bool,
    pub frames: Vec<usize>,
    pub detections: usize,
    pub remaining_budget: usize,
    pub all_found: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub keyframes: Vec<Keyframe>,
    pub iterations: usize,
    pub frames_examined: usize,
    pub termination: Termination,
    pub targets: SemanticTargets,
    pub warnings: Vec<String>,
    pub trace: Vec<IterationRecord>,
}

/// The three pluggable providers a search needs.
pub struct Backends<'a> {
    pub detector: &'a mut dyn Detector,
    pub encoder: &'a mut dyn TextEncoder,
    pub planner: &'a mut dyn TargetPlanner,
}

/// The `k` highest stored fused scores among visited frames, ties broken
/// by ascending frame index.
pub fn select_topk(state: &ScoreState, k: usize) -> Result<Vec<(usize, f64)>> {
    if state.visited.is_empty() {
        return Err(Error::InvalidState("no visited frames to rank".into()));
    }
    let mut ranked: Vec<(usize, f64)> = state
        .visited
        .iter()
        .map(|&f| (f, state.fused_scores[f]))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

pub fn search(
    timeline: &VideoTimeline,
    track: &SubtitleTrack,
    query: &str,
    cfg: &SearchConfig,
    backends: Backends<'_>,
) -> Result<SearchOutcome> {
    search_with_observer(timeline, track, query, cfg, backends, &mut |_, _| {})
}

/// Like [`search`], calling `observer` after every iteration with the
/// iteration record and the state as it stands.
pub fn search_with_observer(
    timeline: &VideoTimeline,
    track: &SubtitleTrack,
    query: &str,
    cfg: &SearchConfig,
    backends: Backends<'_>,
    observer: &mut dyn FnMut(&IterationRecord, &ScoreState),
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let Backends {
        detector,
        encoder,
        planner,
    } = backends;
    let aborted = |source: BackendError, partial: &[IterationRecord]| Error::Search {
        source,
        partial: partial.to_vec(),
    };

    let targets = planner
        .plan(query, cfg.top_k)
        .map_err(|e| aborted(e, &[]))?;
    if targets.targets().is_empty() {
        return Err(Error::Config("planner returned no target objects".into()));
    }
    let vocabulary = targets.vocabulary();

    let mut warnings = Vec::new();
    let text = match compute_text_stream(query, track, timeline, cfg, encoder) {
        Ok(stream) => stream,
        Err(Error::Backend(e)) => return Err(aborted(e, &[])),
        Err(Error::InvalidInput(msg)) => {
            warnings.push(format!("subtitle stream disabled: {msg}"));
            TextStream::silent(timeline)
        }
        Err(e) => return Err(e),
    };
    if cfg.text_weight > 0.0 && !text.has_signal() {
        warnings.push(format!(
            "subtitle stream carries no signal but text_weight is {}; frames tie on the text term",
            cfg.text_weight
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let normalized_text =
        NormalizedText::new(&text.frame_scores, cfg.normalization, cfg.znorm_epsilon);
    let mut state = ScoreState::new(text.frame_scores)?;
    let mut found = FoundLog::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let max_side = cfg.effective_max_grid_side();
    let mut remaining = cfg.frame_budget;
    let mut trace: Vec<IterationRecord> = Vec::new();

    let termination = loop {
        if check_all_found(&found, &targets, cfg.detection_threshold) {
            break Termination::AllTargetsFound;
        }
        if remaining == 0 {
            break Termination::BudgetExhausted;
        }
        let batch = sample_frames(
            &state.distribution,
            remaining,
            &state.visited,
            max_side,
            &mut rng,
        );
        if batch.is_empty() {
            break Termination::FramesExhausted;
        }

        let detections = detector
            .detect(&batch.indices, &vocabulary)
            .map_err(|e| aborted(e, &trace))?;
        let in_batch: HashSet<usize> = batch.indices.iter().copied().collect();
        found.record_all(
            &detections
                .iter()
                .filter(|d| in_batch.contains(&d.frame))
                .cloned()
                .collect::<Vec<_>>(),
            &targets,
        );
        for (f, s) in score_objects(&detections, &targets, &batch) {
            state.object_scores[f] = s;
        }
        state.visited.extend(batch.indices.iter().copied());
        let fused = fuse_batch(
            &state,
            &normalized_text,
            &batch.indices,
            cfg.text_weight,
            cfg.normalization,
            cfg.znorm_epsilon,
        );
        assign_scores(&mut state, &fused)?;
        remaining -= batch.len();

        let all_found = check_all_found(&found, &targets, cfg.detection_threshold);
        if !all_found {
            refresh_distribution(&mut state)?;
        }
        let record = IterationRecord {
            iteration: trace.len() + 1,
            grid_side: batch.grid_side,
            partial: batch.partial,
            frames: batch.indices,
            detections: detections.len(),
            remaining_budget: remaining,
            all_found,
        };
        observer(&record, &state);
        trace.push(record);
    };

    let keyframes = if state.visited.is_empty() {
        Vec::new()
    } else {
        select_topk(&state, cfg.top_k)?
            .into_iter()
            .map(|(frame, score)| Keyframe {
                frame,
                score,
                time_s: timeline.frame_to_seconds(frame),
            })
            .collect()
    };

    Ok(SearchOutcome {
        keyframes,
        iterations: trace.len(),
        frames_examined: cfg.frame_budget - remaining,
        termination,
        targets,
        warnings,
        trace,
    })
}
