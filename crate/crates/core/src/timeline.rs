//! Frame/time mapping for a video. Frames are 0-indexed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The search space: `frame_count` frames played at `fps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTimeline")]
pub struct VideoTimeline {
    frame_count: usize,
    fps: f64,
}

#[derive(Deserialize)]
struct RawTimeline {
    frame_count: usize,
    fps: f64,
}

impl TryFrom<RawTimeline> for VideoTimeline {
    type Error = Error;

    fn try_from(raw: RawTimeline) -> Result<Self> {
        VideoTimeline::new(raw.frame_count, raw.fps)
    }
}

impl VideoTimeline {
    pub fn new(frame_count: usize, fps: f64) -> Result<Self> {
        if frame_count == 0 {
            return Err(Error::InvalidInput("frame_count must be at least 1".into()));
        }
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "fps must be positive and finite, got {fps}"
            )));
        }
        Ok(Self { frame_count, fps })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn duration_s(&self) -> f64 {
        self.frame_count as f64 / self.fps
    }

    pub fn frame_to_seconds(&self, frame: usize) -> f64 {
        frame as f64 / self.fps
    }

    /// `floor(t * fps)` clamped to the valid frame range.
    pub fn seconds_to_frame(&self, t: f64) -> Result<usize> {
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "timestamp must be finite, got {t}"
            )));
        }
        let raw = (t * self.fps).floor();
        let last = (self.frame_count - 1) as f64;
        Ok(raw.clamp(0.0, last) as usize)
    }
}

pub fn seconds_to_frame(t: f64, timeline: &VideoTimeline) -> Result<usize> {
    timeline.seconds_to_frame(t)
}
