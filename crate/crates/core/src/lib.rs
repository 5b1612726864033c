//! Training-free keyframe search for long videos.
//!
//! Two score streams are combined to steer an iterative frame sampler:
//!
//! - the subtitle stream ([`textstream`]) embeds the query and every subtitle
//!   segment, sharpens cosine similarities with a soft threshold and spreads
//!   them over time with Gaussian kernels;
//! - the video stream ([`videostream`]) samples frames in grid-sized batches,
//!   runs an open-vocabulary detector and scores frames by their best
//!   weighted target/cue detection.
//!
//! [`fusion`] z-normalizes and mixes the two streams and turns the visited
//! scores into the next sampling distribution; [`search`] runs the loop.
//! [`harness`] generates synthetic cases with planted ground truth and
//! benchmarks configurations against them. [`protocol`] speaks the
//! newline-delimited JSON protocol used by out-of-process model backends.

pub mod config;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod interp;
pub mod protocol;
pub mod search;
pub mod state;
pub mod subtitle;
pub mod targets;
pub mod textstream;
pub mod timeline;
pub mod videostream;

pub use config::{Normalization, SearchConfig};
pub use error::{BackendError, Error, Result, SrtError};
pub use search::{
    search, search_with_observer, select_topk, Backends, Keyframe, SearchOutcome, Termination,
};
pub use state::ScoreState;
pub use subtitle::{parse_srt, SubtitleSegment, SubtitleTrack};
pub use targets::{SemanticTargets, WeightedObject};
pub use timeline::VideoTimeline;
