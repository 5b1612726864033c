/// Default tolerance, in frames, between a predicted keyframe and a
/// ground-truth frame.
pub const DEFAULT_HIT_WINDOW: usize = 200;

/// True when any predicted frame lies within `window` frames (inclusive) of
/// any ground-truth frame. An empty prediction never hits.
pub fn keyframe_hit(predicted: &[usize], gt_frames: &[usize], window: usize) -> bool {
    predicted
        .iter()
        .any(|&p| gt_frames.iter().any(|&g| p.abs_diff(g) <= window))
}
