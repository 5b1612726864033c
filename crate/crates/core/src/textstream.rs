//! Subtitle-match stream.
//!
//! The query and every subtitle segment are embedded in one batch. Cosine
//! similarities are sharpened with a soft threshold, each segment that clears
//! `segment_threshold` spreads its score over time with a Gaussian centred on
//! the segment midpoint, and each frame keeps the strongest kernel covering it.

use serde::{Deserialize, Serialize};

use crate::config::SearchConfig;
use crate::error::{BackendError, Error, Result};
use crate::subtitle::{SubtitleSegment, SubtitleTrack};
use crate::timeline::VideoTimeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Sentence encoder. Must return one vector per input, in order, and be
/// deterministic for identical inputs within a session.
pub trait TextEncoder {
    fn embed(&mut self, texts: &[String]) -> Result<Vec<Embedding>, BackendError>;
}

impl<T: TextEncoder + ?Sized> TextEncoder for Box<T> {
    fn embed(&mut self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        (**self).embed(texts)
    }
}

/// Deterministic lexical encoder: signed feature hashing of lowercase
/// alphanumeric tokens, L2-normalized. Texts without tokens map to zero.
#[derive(Debug, Clone)]
pub struct HashedBagOfWords {
    dim: usize,
}

impl HashedBagOfWords {
    pub const DEFAULT_DIM: usize = 64;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn encode(&self, text: &str) -> Embedding {
        let mut v = vec![0.0; self.dim];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let h = fnv1a(token.to_lowercase().as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if (h >> 63) & 1 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Embedding(v)
    }
}

impl Default for HashedBagOfWords {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl TextEncoder for HashedBagOfWords {
    fn embed(&mut self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        Ok(texts.iter().map(|t| self.encode(t)).collect())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Cosine similarity of the query against each segment. Zero segment
/// vectors score 0.
pub fn similarity_scores(query: &Embedding, segments: &[Embedding]) -> Result<Vec<f64>> {
    let q_norm = query.norm();
    if q_norm == 0.0 {
        return Err(Error::InvalidInput(
            "query embedding is the zero vector".into(),
        ));
    }
    segments
        .iter()
        .map(|s| {
            if s.dim() != query.dim() {
                return Err(Error::InvalidInput(format!(
                    "embedding dimension mismatch: query {} vs segment {}",
                    query.dim(),
                    s.dim()
                )));
            }
            let s_norm = s.norm();
            if s_norm == 0.0 {
                return Ok(0.0);
            }
            let dot: f64 = query.0.iter().zip(&s.0).map(|(a, b)| a * b).sum();
            Ok((dot / (q_norm * s_norm)).clamp(-1.0, 1.0))
        })
        .collect()
}

/// Raw and soft-thresholded similarities for each segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhancedSimilarity {
    pub raw: Vec<f64>,
    pub enhanced: Vec<f64>,
}

/// `min(c + amplification * max(c - threshold, 0), 1)` elementwise.
pub fn soft_threshold(raw: &[f64], threshold: f64, amplification: f64) -> Vec<f64> {
    raw.iter()
        .map(|&c| (c + amplification * (c - threshold).max(0.0)).min(1.0))
        .collect()
}

/// Kernel spread for a segment: `(duration + 2W) / 4`.
pub fn kernel_sigma(seg: &SubtitleSegment, extension_radius_s: f64) -> f64 {
    (seg.end_s - seg.begin_s + 2.0 * extension_radius_s) / 4.0
}

/// Gaussian propagation of `amplitude` from the segment midpoint to time `t`.
pub fn gaussian_kernel(
    seg: &SubtitleSegment,
    amplitude: f64,
    extension_radius_s: f64,
    t: f64,
) -> f64 {
    let center = seg.center();
    let sigma = kernel_sigma(seg, extension_radius_s);
    if sigma == 0.0 {
        return if t == center { amplitude } else { 0.0 };
    }
    let d = t - center;
    amplitude * (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Per-frame text score: the maximum kernel value over segments whose
/// enhanced score exceeds `segment_threshold` and whose extended span
/// `[b - W, e + W]` contains the frame time. Frames covered by no such
/// segment score 0.
pub fn aggregate_text_scores(
    track: &SubtitleTrack,
    enhanced: &[f64],
    timeline: &VideoTimeline,
    cfg: &SearchConfig,
) -> Result<Vec<f64>> {
    if enhanced.len() != track.len() {
        return Err(Error::InvalidInput(format!(
            "{} enhanced scores for {} segments",
            enhanced.len(),
            track.len()
        )));
    }
    let n = timeline.frame_count();
    let w = cfg.extension_radius_s;
    let fps = timeline.fps();
    let mut scores = vec![0.0f64; n];

    for (seg, &amp) in track.segments().iter().zip(enhanced) {
        if amp <= cfg.segment_threshold {
            continue;
        }
        let lo = seg.begin_s - w;
        let hi = seg.end_s + w;
        if hi < 0.0 {
            continue;
        }
        // Candidate range padded by one frame; membership is decided on the
        // frame time itself so that boundary frames match a direct scan.
        let first = ((lo * fps).floor() - 1.0).max(0.0) as usize;
        let last = (((hi * fps).ceil() + 1.0).max(0.0) as usize).min(n - 1);
        if first > last {
            continue;
        }
        for (f, slot) in scores.iter_mut().enumerate().take(last + 1).skip(first) {
            let t = timeline.frame_to_seconds(f);
            if t >= lo && t <= hi {
                let v = gaussian_kernel(seg, amp, w, t);
                if v > *slot {
                    *slot = v;
                }
            }
        }
    }
    scores.iter_mut().for_each(|s| *s = s.clamp(0.0, 1.0));
    Ok(scores)
}

/// Output of the full subtitle-match stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TextStream {
    pub similarity: EnhancedSimilarity,
    pub frame_scores: Vec<f64>,
}

impl TextStream {
    pub fn silent(timeline: &VideoTimeline) -> Self {
        Self {
            similarity: EnhancedSimilarity {
                raw: Vec::new(),
                enhanced: Vec::new(),
            },
            frame_scores: vec![0.0; timeline.frame_count()],
        }
    }

    pub fn has_signal(&self) -> bool {
        self.frame_scores.iter().any(|&s| s > 0.0)
    }
}

/// Run the whole subtitle stream with a single encoder call for the query
/// and all segment texts.
pub fn compute_text_stream(
    query: &str,
    track: &SubtitleTrack,
    timeline: &VideoTimeline,
    cfg: &SearchConfig,
    encoder: &mut dyn TextEncoder,
) -> Result<TextStream> {
    if track.is_empty() {
        return Ok(TextStream::silent(timeline));
    }
    let mut texts = Vec::with_capacity(track.len() + 1);
    texts.push(query.to_string());
    texts.extend(track.texts());
    let mut vectors = encoder.embed(&texts)?;
    if vectors.len() != texts.len() {
        return Err(BackendError::Protocol(format!(
            "encoder returned {} vectors for {} texts",
            vectors.len(),
            texts.len()
        ))
        .into());
    }
    if vectors.iter().flat_map(|v| &v.0).any(|x| !x.is_finite()) {
        return Err(BackendError::Protocol("encoder returned non-finite values".into()).into());
    }
    let segment_vecs = vectors.split_off(1);
    let raw = similarity_scores(&vectors[0], &segment_vecs)?;
    let enhanced = soft_threshold(&raw, cfg.sim_threshold, cfg.amplification);
    let frame_scores = aggregate_text_scores(track, &enhanced, timeline, cfg)?;
    Ok(TextStream {
        similarity: EnhancedSimilarity { raw, enhanced },
        frame_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(b: f64, e: f64) -> SubtitleSegment {
        SubtitleSegment::new(1, b, e, "x").unwrap()
    }

    #[test]
    fn cosine_examples() {
        let q = Embedding(vec![1.0, 0.0]);
        let sims = similarity_scores(
            &q,
            &[
                Embedding(vec![1.0, 0.0]),
                Embedding(vec![0.0, 3.0]),
                Embedding(vec![1.0, 1.0]),
                Embedding(vec![0.0, 0.0]),
            ],
        )
        .unwrap();
        assert_eq!(sims[0], 1.0);
        assert_eq!(sims[1], 0.0);
        assert!((sims[2] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(sims[3], 0.0);
    }

    #[test]
    fn cosine_rejects_mismatch_and_zero_query() {
        let q = Embedding(vec![1.0, 0.0]);
        assert!(similarity_scores(&q, &[Embedding(vec![1.0])]).is_err());
        assert!(similarity_scores(&Embedding(vec![0.0, 0.0]), &[q]).is_err());
    }

    #[test]
    fn soft_threshold_examples() {
        let out = soft_threshold(&[0.5, 0.6, 0.95, 0.1, -0.3], 0.5, 2.0);
        assert_eq!(out[0], 0.5);
        assert!((out[1] - 0.8).abs() < 1e-12);
        assert_eq!(out[2], 1.0);
        assert_eq!(out[3], 0.1);
        assert_eq!(out[4], -0.3);
    }

    #[test]
    fn kernel_examples() {
        let s = seg(10.0, 14.0);
        assert_eq!(gaussian_kernel(&s, 0.7, 2.0, 12.0), 0.7);
        assert_eq!(kernel_sigma(&s, 2.0), 2.0);
        assert!((gaussian_kernel(&s, 1.0, 2.0, 14.0) - (-0.5f64).exp()).abs() < 1e-12);
        let point = seg(3.0, 3.0);
        assert_eq!(kernel_sigma(&point, 2.0), 1.0);
        assert_eq!(gaussian_kernel(&point, 0.5, 2.0, 3.0), 0.5);
    }

    #[test]
    fn zero_width_kernel_is_a_spike() {
        let point = seg(3.0, 3.0);
        assert_eq!(gaussian_kernel(&point, 0.5, 0.0, 3.0), 0.5);
        assert_eq!(gaussian_kernel(&point, 0.5, 0.0, 3.0001), 0.0);
    }

    #[test]
    fn aggregation_support_and_gate() {
        let tl = VideoTimeline::new(300, 10.0).unwrap();
        let cfg = SearchConfig::default();
        let track = SubtitleTrack::new(vec![seg(10.0, 12.0)]);

        let gated = aggregate_text_scores(&track, &[0.2], &tl, &cfg).unwrap();
        assert!(gated.iter().all(|&s| s == 0.0));

        let scores = aggregate_text_scores(&track, &[0.9], &tl, &cfg).unwrap();
        for (f, &s) in scores.iter().enumerate() {
            let t = f as f64 / 10.0;
            if !(8.0..=14.0).contains(&t) {
                assert_eq!(s, 0.0, "frame {f}");
            } else {
                assert!(s > 0.0, "frame {f}");
            }
        }
        assert_eq!(scores[110], 0.9);
    }

    #[test]
    fn aggregation_length_mismatch() {
        let tl = VideoTimeline::new(10, 1.0).unwrap();
        let track = SubtitleTrack::new(vec![seg(1.0, 2.0)]);
        assert!(aggregate_text_scores(&track, &[], &tl, &SearchConfig::default()).is_err());
    }

    #[test]
    fn stub_encoder_is_deterministic_and_normalized() {
        let mut enc = HashedBagOfWords::default();
        let texts = vec![
            "A red umbrella".to_string(),
            "a RED umbrella!".to_string(),
            "".into(),
        ];
        let v = enc.embed(&texts).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[0].dim(), 64);
        assert!((v[0].norm() - 1.0).abs() < 1e-12);
        assert_eq!(v[2].norm(), 0.0);
    }

    #[test]
    fn empty_track_is_silent() {
        let tl = VideoTimeline::new(50, 5.0).unwrap();
        let mut enc = HashedBagOfWords::default();
        let stream = compute_text_stream(
            "q",
            &SubtitleTrack::empty(),
            &tl,
            &SearchConfig::default(),
            &mut enc,
        )
        .unwrap();
        assert_eq!(stream.frame_scores, vec![0.0; 50]);
        assert!(!stream.has_signal());
    }

    #[test]
    fn matching_subtitle_peaks_at_its_midpoint() {
        let tl = VideoTimeline::new(600, 10.0).unwrap();
        let track = SubtitleTrack::new(vec![
            SubtitleSegment::new(1, 20.0, 24.0, "the red umbrella by the bicycle").unwrap(),
            SubtitleSegment::new(2, 40.0, 42.0, "coffee tomorrow morning maybe").unwrap(),
        ]);
        let mut enc = HashedBagOfWords::default();
        let stream = compute_text_stream(
            "red umbrella bicycle",
            &track,
            &tl,
            &SearchConfig::default(),
            &mut enc,
        )
        .unwrap();
        let argmax = stream
            .frame_scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 220);
        assert!(stream.similarity.enhanced[0] > stream.similarity.raw[0]);
    }

    proptest! {
        #[test]
        fn soft_threshold_monotone_and_capped(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let out = soft_threshold(&[lo, hi], 0.5, 2.0);
            prop_assert!(out[0] <= out[1]);
            prop_assert!(out[1] <= 1.0);
            prop_assert!(out[0] >= lo.min(1.0));
        }

        #[test]
        fn soft_threshold_identity_below_threshold(c in -1.0f64..=0.5, theta in 0.5f64..1.0) {
            prop_assert_eq!(soft_threshold(&[c], theta, 2.0)[0], c);
        }

        #[test]
        fn kernel_is_symmetric(b in 0.0f64..1000.0, len in 0.0f64..30.0, w in 0.0f64..5.0,
                               amp in 0.0f64..1.0, delta in 0.0f64..50.0) {
            let s = seg(b, b + len);
            let c = s.center();
            let l = gaussian_kernel(&s, amp, w, c - delta);
            let r = gaussian_kernel(&s, amp, w, c + delta);
            prop_assert!((l - r).abs() <= 1e-12);
        }
    }
}
