//! Synthetic cases with planted ground truth.
//!
//! Each case plants `n_gt` ground-truth windows. Inside a window every
//! target object is detected (minus per-frame misses controlled by `noise`)
//! and, with probability `subtitle_alignment`, a subtitle that restates the
//! query is spoken. Elsewhere the detector sees distractor episodes that
//! contain the primary target but never the secondary one, so only the
//! ground-truth windows satisfy "all targets found". Filler dialogue covers
//! the rest of the timeline and shares no words with the query.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subtitle::{SubtitleSegment, SubtitleTrack};
use crate::targets::{SemanticTargets, WeightedObject, DEFAULT_CUE_WEIGHT};
use crate::timeline::VideoTimeline;
use crate::videostream::{ScriptedDetection, ScriptedDetector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub n_frames: usize,
    pub fps: f64,
    pub n_gt: usize,
    /// Probability that a ground-truth window gets a matching subtitle.
    pub subtitle_alignment: f64,
    /// Fraction of non-ground-truth frames covered by distractor episodes.
    pub distractor_rate: f64,
    /// Per-frame miss probability for real detections; also drives the rate
    /// of low-confidence spurious detections.
    pub noise: f64,
    /// Half-width in frames of each ground-truth window.
    pub gt_radius: usize,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n_frames: 4000,
            fps: 30.0,
            n_gt: 1,
            subtitle_alignment: 1.0,
            distractor_rate: 0.15,
            noise: 0.1,
            gt_radius: 15,
        }
    }
}

impl GeneratorParams {
    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Generation(m));
        if self.n_frames < 100 {
            return fail(format!(
                "n_frames must be at least 100, got {}",
                self.n_frames
            ));
        }
        if self.n_gt == 0 {
            return fail("n_gt must be at least 1".into());
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return fail(format!("fps must be positive, got {}", self.fps));
        }
        for (name, v) in [
            ("subtitle_alignment", self.subtitle_alignment),
            ("distractor_rate", self.distractor_rate),
            ("noise", self.noise),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        let window = 2 * self.gt_radius + 1;
        if self.n_gt * window > self.n_frames {
            return fail(format!(
                "{} windows of {window} frames do not fit in {} frames",
                self.n_gt, self.n_frames
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCase {
    pub seed: u64,
    pub timeline: VideoTimeline,
    pub track: SubtitleTrack,
    pub query: String,
    pub targets: SemanticTargets,
    pub detector_script: ScriptedDetector,
    pub gt_frames: Vec<usize>,
}

const OBJECTS: &[&str] = &[
    "umbrella",
    "bicycle",
    "guitar",
    "laptop",
    "suitcase",
    "teapot",
    "skateboard",
    "backpack",
    "clock",
    "vase",
    "kite",
    "pizza",
    "horse",
    "bench",
    "lamp",
    "trophy",
    "camera",
    "violin",
    "tractor",
    "lantern",
];
const COLORS: &[&str] = &[
    "red", "blue", "green", "yellow", "black", "white", "orange", "purple",
];

const QUERY_TEMPLATES: &[&str] = &[
    "what happens when the {a} appears next to the {b}",
    "where is the {a} placed beside the {b}",
    "when does someone mention the {a} and the {b}",
    "which scene shows the {a} near the {b}",
];
const ALIGNED_TEMPLATES: &[&str] = &[
    "look the {a} is right next to the {b}",
    "put the {a} beside the {b} please",
    "i see the {a} near the {b} over here",
    "the {a} and the {b} are both here",
];
/// Filler dialogue vocabulary; disjoint from every query and aligned template word.
const FILLER: &[&str] = &[
    "coffee", "morning", "really", "think", "going", "tomorrow", "okay", "yeah", "maybe", "later",
    "weather", "nice", "work", "home", "dinner", "friend", "call", "soon", "busy", "tired",
    "music", "game", "phone", "ready", "train", "late", "early", "forgot", "remember", "guess",
    "sure", "wait", "hungry", "quiet", "movie", "weekend", "sorry", "thanks", "hello", "bye",
];

fn fill(template: &str, a: &str, b: &str) -> String {
    template.replace("{a}", a).replace("{b}", b)
}

/// Generate one case. The same `(seed, params)` always yields the same case.
pub fn generate_case(seed: u64, params: &GeneratorParams) -> Result<SyntheticCase> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n_frames;
    let r = params.gt_radius;
    let timeline = VideoTimeline::new(n, params.fps)?;

    let gt_frames = place_ground_truth(&mut rng, params)?;

    let mut objects: Vec<&str> = OBJECTS.to_vec();
    objects.shuffle(&mut rng);
    let color = COLORS.choose(&mut rng).expect("non-empty");
    let primary = format!("{color} {}", objects[0]);
    let secondary = objects[1].to_string();
    let cue = objects[2].to_string();
    let targets = SemanticTargets::new(
        vec![
            WeightedObject::new(primary.clone(), 1.0),
            WeightedObject::new(secondary.clone(), 1.0),
        ],
        vec![WeightedObject::new(cue.clone(), DEFAULT_CUE_WEIGHT)],
    )?;
    let query = fill(
        QUERY_TEMPLATES.choose(&mut rng).expect("non-empty"),
        &primary,
        &secondary,
    );

    // Subtitles: aligned segments first, then filler around them.
    let fps = params.fps;
    let duration = timeline.duration_s();
    let mut aligned: Vec<(f64, f64, String)> = Vec::new();
    for &g in &gt_frames {
        if rng.random::<f64>() < params.subtitle_alignment {
            let center = g as f64 / fps;
            let half = rng.random_range(1.5..2.5);
            let b = (center - half).max(0.0);
            let e = (center + half).min(duration);
            let text = fill(
                ALIGNED_TEMPLATES.choose(&mut rng).expect("non-empty"),
                &primary,
                &secondary,
            );
            aligned.push((b, e, text));
        }
    }
    let mut raw_segments = aligned.clone();
    let mut t = rng.random_range(0.0..2.0);
    while t < duration {
        let len = rng.random_range(1.5..4.0);
        let (b, e) = (t, (t + len).min(duration));
        let clashes = aligned
            .iter()
            .any(|(ab, ae, _)| b < ae + 0.5 && e > ab - 0.5);
        if !clashes && e > b {
            let words = rng.random_range(4..9);
            let text: Vec<&str> = (0..words)
                .map(|_| *FILLER.choose(&mut rng).expect("non-empty"))
                .collect();
            raw_segments.push((b, e, text.join(" ")));
        }
        t = e + rng.random_range(0.5..3.0);
    }
    raw_segments.sort_by(|x, y| x.0.total_cmp(&y.0));
    let segments = raw_segments
        .into_iter()
        .enumerate()
        .map(|(i, (b, e, text))| {
            // millisecond timing, as a subtitle file would carry
            let b = (b * 1000.0).round() / 1000.0;
            let e = (e * 1000.0).round() / 1000.0;
            SubtitleSegment::new(i as u32 + 1, b, e, text)
        })
        .collect::<Result<Vec<_>>>()?;
    let track = SubtitleTrack::new(segments);

    // Detector script.
    let mut script: BTreeMap<usize, Vec<ScriptedDetection>> = BTreeMap::new();
    let mut push = |f: usize, name: &str, confidence: f64| {
        script.entry(f).or_default().push(ScriptedDetection {
            name: name.to_string(),
            confidence,
        });
    };
    let in_gt = |f: usize| gt_frames.iter().any(|&g| f.abs_diff(g) <= r);
    for &g in &gt_frames {
        for f in g.saturating_sub(r)..=(g + r).min(n - 1) {
            for name in [&primary, &secondary] {
                if rng.random::<f64>() >= params.noise {
                    push(f, name, rng.random_range(0.6..0.95));
                }
            }
            if rng.random::<f64>() < 0.5 {
                push(f, &cue, rng.random_range(0.5..0.9));
            }
        }
    }

    let outside = n - (0..n).filter(|&f| in_gt(f)).count();
    let want = (params.distractor_rate * outside as f64).round() as usize;
    let episode = 2 * r + 1;
    let mut covered = vec![false; n];
    let mut covered_count = 0;
    let mut attempts = 0;
    while covered_count < want && attempts < 10_000 {
        attempts += 1;
        let start = rng.random_range(0..n);
        let end = (start + episode).min(n);
        if (start..end).any(&in_gt) {
            continue;
        }
        for slot in &mut covered[start..end] {
            if covered_count >= want {
                break;
            }
            if !*slot {
                *slot = true;
                covered_count += 1;
            }
        }
    }
    for (f, _) in covered.iter().enumerate().filter(|(_, c)| **c) {
        if rng.random::<f64>() >= params.noise {
            push(f, &primary, rng.random_range(0.6..0.95));
        }
        if rng.random::<f64>() < 0.3 {
            push(f, &cue, rng.random_range(0.5..0.9));
        }
    }

    // Spurious low-confidence detections anywhere.
    let spurious_rate = params.noise * 0.2;
    for f in 0..n {
        if rng.random::<f64>() < spurious_rate {
            let name = if rng.random::<bool>() {
                &primary
            } else {
                &secondary
            };
            push(f, name, rng.random_range(0.05..0.45));
        }
    }

    Ok(SyntheticCase {
        seed,
        timeline,
        track,
        query,
        targets,
        detector_script: ScriptedDetector::new(script),
        gt_frames,
    })
}

fn place_ground_truth(rng: &mut ChaCha8Rng, params: &GeneratorParams) -> Result<Vec<usize>> {
    let n = params.n_frames;
    let r = params.gt_radius;
    let lo = r.min(n - 1);
    let hi = n.saturating_sub(r + 1).max(lo);
    let mut gt: Vec<usize> = Vec::with_capacity(params.n_gt);
    let mut attempts = 0;
    while gt.len() < params.n_gt {
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::Generation(format!(
                "could not place {} separated ground-truth windows",
                params.n_gt
            )));
        }
        let g = rng.random_range(lo..=hi);
        if gt.iter().all(|&o| o.abs_diff(g) > 2 * r) {
            gt.push(g);
        }
    }
    gt.sort_unstable();
    Ok(gt)
}

/// `count` cases whose seeds are drawn from `master_seed`.
pub fn generate_corpus(
    master_seed: u64,
    count: usize,
    params: &GeneratorParams,
) -> Result<Vec<SyntheticCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..count)
        .map(|_| generate_case(rng.random(), params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textstream::{compute_text_stream, HashedBagOfWords};
    use crate::SearchConfig;

    #[test]
    fn deterministic() {
        let p = GeneratorParams::default();
        assert_eq!(generate_case(3, &p).unwrap(), generate_case(3, &p).unwrap());
        assert_ne!(generate_case(3, &p).unwrap(), generate_case(4, &p).unwrap());
    }

    #[test]
    fn aligned_case_co_locates_text_and_targets() {
        let case = generate_case(1, &GeneratorParams::default()).unwrap();
        assert_eq!(case.gt_frames.len(), 1);
        let g = case.gt_frames[0];
        let stream = compute_text_stream(
            &case.query,
            &case.track,
            &case.timeline,
            &SearchConfig::default(),
            &mut HashedBagOfWords::default(),
        )
        .unwrap();
        let peak = stream
            .frame_scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(peak.abs_diff(g) <= 200, "text peak {peak} vs gt {g}");
        let secondary = &case.targets.targets()[1].name;
        for f in case.detector_script.frames_with(secondary) {
            let conf_high = case.detector_script.script()[&f]
                .iter()
                .any(|d| &d.name == secondary && d.confidence >= 0.5);
            if conf_high {
                assert!(
                    f.abs_diff(g) <= GeneratorParams::default().gt_radius,
                    "secondary target fired at {f}"
                );
            }
        }
    }

    #[test]
    fn zero_alignment_has_no_matching_subtitle() {
        let p = GeneratorParams {
            subtitle_alignment: 0.0,
            ..GeneratorParams::default()
        };
        let case = generate_case(1, &p).unwrap();
        let primary = &case.targets.targets()[0].name;
        assert!(case
            .track
            .segments()
            .iter()
            .all(|s| !s.text.contains(primary.as_str())));
    }

    #[test]
    fn infeasible_params() {
        let p = GeneratorParams {
            n_frames: 100,
            n_gt: 3,
            gt_radius: 20,
            ..GeneratorParams::default()
        };
        assert!(matches!(generate_case(0, &p), Err(Error::Generation(_))));
        let p = GeneratorParams {
            n_frames: 50,
            ..GeneratorParams::default()
        };
        assert!(generate_case(0, &p).is_err());
        let p = GeneratorParams {
            n_gt: 0,
            ..GeneratorParams::default()
        };
        assert!(generate_case(0, &p).is_err());
    }

    #[test]
    fn multiple_windows_are_separated() {
        let p = GeneratorParams {
            n_gt: 4,
            ..GeneratorParams::default()
        };
        let case = generate_case(11, &p).unwrap();
        assert_eq!(case.gt_frames.len(), 4);
        for w in case.gt_frames.windows(2) {
            assert!(w[1] - w[0] > 90);
        }
    }

    #[test]
    fn case_json_roundtrip() {
        let case = generate_case(5, &GeneratorParams::default()).unwrap();
        let json = serde_json::to_string(&case).unwrap();
        let back: SyntheticCase = serde_json::from_str(&json).unwrap();
        assert_eq!(case, back);
    }
}
