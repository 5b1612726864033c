use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vsi_core::{Normalization, SearchConfig};

#[derive(Debug, Parser)]
#[command(
    name = "vsi",
    version,
    about = "Keyframe search over long videos guided by subtitles and object detection"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search one video for the keyframes that answer a query.
    Search(SearchArgs),
    /// Compare search configurations on a synthetic corpus.
    Bench(BenchArgs),
    /// Check input files without running anything.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Settings file (TOML). Defaults to $VSI_CONFIG when set.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of frames in the video.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Subtitle file (SRT).
    #[arg(long)]
    pub subtitles: Option<PathBuf>,
    #[arg(long)]
    pub query: Option<String>,
    /// Target objects file (JSON).
    #[arg(long)]
    pub targets: Option<PathBuf>,
    /// Detector backend: stub:FIXTURE, proc:CMDLINE or http:URL.
    #[arg(long)]
    pub detector: Option<String>,
    /// Text encoder backend: stub[:DIM], proc:CMDLINE or http:URL.
    #[arg(long)]
    pub encoder: Option<String>,
    /// Result file; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write one score-state snapshot per iteration (JSON lines).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also accept `.` as the millisecond separator in subtitle timestamps.
    #[arg(long)]
    pub lenient_srt: bool,
    #[arg(long)]
    pub text_weight: Option<f64>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Corpus manifest (JSON list of case files).
    #[arg(long, conflicts_with = "generate")]
    pub corpus: Option<PathBuf>,
    /// Generate a corpus: SEED,COUNT[,KEY=VALUE...].
    #[arg(long)]
    pub generate: Option<String>,
    /// Also write the generated corpus to this directory.
    #[arg(long)]
    pub save_corpus: Option<PathBuf>,
    /// Add a row from a settings file (repeatable).
    #[arg(long = "config")]
    pub configs: Vec<PathBuf>,
    /// Add a row with this text weight (repeatable).
    #[arg(long = "text-weight")]
    pub text_weights: Vec<f64>,
    /// Directory receiving report.json and report.txt.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Hit tolerance in frames.
    #[arg(long)]
    pub hit_window: Option<usize>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long = "srt")]
    pub srt: Vec<PathBuf>,
    #[arg(long = "targets")]
    pub targets: Vec<PathBuf>,
    /// Scripted detector fixture.
    #[arg(long = "fixture")]
    pub fixtures: Vec<PathBuf>,
    #[arg(long = "config")]
    pub configs: Vec<PathBuf>,
    /// Corpus manifest.
    #[arg(long = "corpus")]
    pub corpora: Vec<PathBuf>,
    #[arg(long)]
    pub lenient_srt: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormalizationArg {
    Zscore,
    Minmax,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Zscore => Normalization::Zscore,
            NormalizationArg::Minmax => Normalization::Minmax,
        }
    }
}

/// Search parameters settable from the command line; each one overrides the
/// settings file.
#[derive(Debug, Default, Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub sim_threshold: Option<f64>,
    #[arg(long)]
    pub amplification: Option<f64>,
    #[arg(long)]
    pub segment_threshold: Option<f64>,
    #[arg(long)]
    pub extension_radius_s: Option<f64>,
    #[arg(long)]
    pub detection_threshold: Option<f64>,
    #[arg(long)]
    pub frame_budget: Option<usize>,
    #[arg(long)]
    pub max_grid_side: Option<usize>,
    /// Size batches from the remaining budget with no grid cap.
    #[arg(long)]
    pub uncapped_grid: bool,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub znorm_epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,
    /// Random seed for frame sampling.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut SearchConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { cfg.$target = v.into(); })*
            };
        }
        set!(
            sim_threshold => sim_threshold,
            amplification => amplification,
            segment_threshold => segment_threshold,
            extension_radius_s => extension_radius_s,
            detection_threshold => detection_threshold,
            frame_budget => frame_budget,
            max_grid_side => max_grid_side,
            top_k => top_k,
            znorm_epsilon => znorm_epsilon,
            normalization => normalization,
            seed => rng_seed,
        );
        if self.uncapped_grid {
            cfg.uncapped_grid = true;
        }
    }
}
