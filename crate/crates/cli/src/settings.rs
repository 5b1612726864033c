//! Settings files.
//!
//! A settings file is TOML. Top-level keys are search parameters (the
//! `SearchConfig` field names). Optional `[search]`, `[bench]` and
//! `[validate]` tables hold the equivalents of the subcommand flags.
//! Command-line flags always win over the file.
//!
//! ```toml
//! text_weight = 0.7
//! frame_budget = 256
//!
//! [search]
//! frames = 9000
//! fps = 30.0
//! subtitles = "talk.srt"
//! query = "where is the red umbrella"
//! targets = "targets.json"
//! detector = "proc:python bridge.py"
//! encoder = "stub"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use vsi_core::SearchConfig;

use crate::failure::Failure;

pub const CONFIG_ENV: &str = "VSI_CONFIG";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub frames: Option<usize>,
    pub fps: Option<f64>,
    pub subtitles: Option<PathBuf>,
    pub query: Option<String>,
    pub targets: Option<PathBuf>,
    pub detector: Option<String>,
    pub encoder: Option<String>,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub lenient_srt: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub corpus: Option<PathBuf>,
    pub generate: Option<String>,
    pub save_corpus: Option<PathBuf>,
    #[serde(default)]
    pub configs: Vec<PathBuf>,
    #[serde(default)]
    pub text_weights: Vec<f64>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub hit_window: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    #[serde(default)]
    pub srt: Vec<PathBuf>,
    #[serde(default)]
    pub targets: Vec<PathBuf>,
    #[serde(default)]
    pub fixtures: Vec<PathBuf>,
    #[serde(default)]
    pub configs: Vec<PathBuf>,
    #[serde(default)]
    pub corpora: Vec<PathBuf>,
    pub lenient_srt: Option<bool>,
}

#[derive(Debug, Default)]
pub struct Settings {
    pub config: SearchConfig,
    pub search: SearchSection,
    pub bench: BenchSection,
    pub validate: ValidateSection,
}

impl Settings {
    pub fn parse(raw: &str) -> Result<Self, String> {
        let mut table: toml::Table = raw
            .parse()
            .map_err(|e: toml::de::Error| e.message().to_string())?;
        fn section<T: for<'de> Deserialize<'de> + Default>(
            table: &mut toml::Table,
            name: &str,
        ) -> Result<T, String> {
            match table.remove(name) {
                None => Ok(T::default()),
                Some(v) => v
                    .try_into()
                    .map_err(|e: toml::de::Error| format!("[{name}]: {}", e.message())),
            }
        }
        let search = section(&mut table, "search")?;
        let bench = section(&mut table, "bench")?;
        let validate = section(&mut table, "validate")?;
        let config: SearchConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| e.message().to_string())?;
        Ok(Self {
            config,
            search,
            bench,
            validate,
        })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        Self::parse(&raw).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }

    /// `explicit`, else `$VSI_CONFIG`, else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, Failure> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()) {
                Some(p) => Self::load(Path::new(&p)),
                None => Ok(Self::default()),
            },
        }
    }
}
