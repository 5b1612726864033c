//! Synthetic ground-truth cases and a benchmark runner.

mod benchmark;
mod generator;
mod metric;

pub use benchmark::{
    case_rng_seed, load_corpus, run_benchmark, run_case, save_corpus, BenchRow, BenchmarkReport,
    LabeledConfig, HIT_RULE,
};
pub use generator::{generate_case, generate_corpus, GeneratorParams, SyntheticCase};
pub use metric::{keyframe_hit, DEFAULT_HIT_WINDOW};
