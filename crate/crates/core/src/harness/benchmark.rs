use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generator::SyntheticCase;
use super::metric::keyframe_hit;
use crate::config::SearchConfig;
use crate::error::{Error, Result};
use crate::search::{search, Backends, SearchOutcome};
use crate::textstream::HashedBagOfWords;
use crate::videostream::StaticPlanner;

pub const HIT_RULE: &str =
    "a case is a hit when any of the top-k keyframes lies within hit_window frames of any ground-truth frame";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledConfig {
    pub label: String,
    pub config: SearchConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub text_weight: f64,
    pub cases: usize,
    pub hits: usize,
    pub failed: usize,
    /// Hits over all cases; failed cases count as misses.
    pub hit_rate: f64,
    /// Means over the cases that completed.
    pub mean_iterations: f64,
    pub mean_frames_examined: f64,
    pub terminations: BTreeMap<String, usize>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub hit_rule: String,
    pub hit_window: usize,
    pub cases: usize,
    pub rows: Vec<BenchRow>,
}

/// Seed for one (config, case) pair so every case gets its own stream while
/// staying reproducible.
pub fn case_rng_seed(config_seed: u64, case_seed: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix(config_seed ^ splitmix(case_seed))
}

/// Run one case with the stub encoder, the case's scripted detector and its
/// known targets.
pub fn run_case(case: &SyntheticCase, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let mut cfg = cfg.clone();
    cfg.rng_seed = case_rng_seed(cfg.rng_seed, case.seed);
    let mut detector = case.detector_script.clone();
    let mut encoder = HashedBagOfWords::default();
    let mut planner = StaticPlanner(case.targets.clone());
    search(
        &case.timeline,
        &case.track,
        &case.query,
        &cfg,
        Backends {
            detector: &mut detector,
            encoder: &mut encoder,
            planner: &mut planner,
        },
    )
}

/// Evaluate every config on every case. `jobs == 0` uses all cores. The
/// report does not depend on `jobs`.
pub fn run_benchmark(
    corpus: &[SyntheticCase],
    configs: &[LabeledConfig],
    hit_window: usize,
    jobs: usize,
) -> Result<BenchmarkReport> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("benchmark corpus is empty".into()));
    }
    if configs.is_empty() {
        return Err(Error::InvalidInput("no configurations to benchmark".into()));
    }
    for c in configs {
        c.config
            .validate()
            .map_err(|e| Error::Config(format!("{}: {e}", c.label)))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;

    let rows = configs
        .iter()
        .map(|lc| {
            let outcomes: Vec<Result<SearchOutcome>> = pool.install(|| {
                corpus
                    .par_iter()
                    .map(|case| run_case(case, &lc.config))
                    .collect()
            });
            summarize(lc, corpus, &outcomes, hit_window)
        })
        .collect();

    Ok(BenchmarkReport {
        hit_rule: HIT_RULE.to_string(),
        hit_window,
        cases: corpus.len(),
        rows,
    })
}

fn summarize(
    lc: &LabeledConfig,
    corpus: &[SyntheticCase],
    outcomes: &[Result<SearchOutcome>],
    hit_window: usize,
) -> BenchRow {
    let mut hits = 0;
    let mut iterations = 0usize;
    let mut frames = 0usize;
    let mut completed = 0usize;
    let mut terminations = BTreeMap::new();
    let mut failures = Vec::new();
    for (case, outcome) in corpus.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                completed += 1;
                iterations += o.iterations;
                frames += o.frames_examined;
                *terminations.entry(o.termination.to_string()).or_insert(0) += 1;
                let predicted: Vec<usize> = o.keyframes.iter().map(|k| k.frame).collect();
                if keyframe_hit(&predicted, &case.gt_frames, hit_window) {
                    hits += 1;
                }
            }
            Err(e) => failures.push(format!("case seed {}: {e}", case.seed)),
        }
    }
    let mean = |total: usize| {
        if completed == 0 {
            0.0
        } else {
            total as f64 / completed as f64
        }
    };
    BenchRow {
        label: lc.label.clone(),
        text_weight: lc.config.text_weight,
        cases: corpus.len(),
        hits,
        failed: failures.len(),
        hit_rate: hits as f64 / corpus.len() as f64,
        mean_iterations: mean(iterations),
        mean_frames_examined: mean(frames),
        terminations,
        failures,
    }
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "cases: {}  hit window: {} frames",
            self.cases, self.hit_window
        );
        let width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(0)
            .max("config".len());
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>8}  {:>10}  {:>11}  {:>6}",
            "config", "tw", "hit_rate", "mean_iters", "mean_frames", "failed"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6.2}  {:>8.3}  {:>10.2}  {:>11.1}  {:>6}",
                r.label,
                r.text_weight,
                r.hit_rate,
                r.mean_iterations,
                r.mean_frames_examined,
                r.failed
            );
        }
        out
    }

    pub fn row(&self, label: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    cases: Vec<String>,
}

/// Write each case as `case_NNNN.json` plus a `manifest.json` listing them.
/// Returns the manifest path.
pub fn save_corpus(dir: impl AsRef<Path>, cases: &[SyntheticCase]) -> Result<std::path::PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut names = Vec::with_capacity(cases.len());
    for (i, case) in cases.iter().enumerate() {
        let name = format!("case_{i:04}.json");
        let path = dir.join(&name);
        let body = serde_json::to_string(case).map_err(|e| Error::json(&path, e))?;
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        names.push(name);
    }
    let manifest = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&Manifest { cases: names })
        .map_err(|e| Error::json(&manifest, e))?;
    std::fs::write(&manifest, body).map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

/// Load a corpus from a manifest; case paths are relative to the manifest.
pub fn load_corpus(manifest: impl AsRef<Path>) -> Result<Vec<SyntheticCase>> {
    let manifest = manifest.as_ref();
    let raw = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let m: Manifest = serde_json::from_str(&raw).map_err(|e| Error::json(manifest, e))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    m.cases
        .iter()
        .map(|name| {
            let path = base.join(name);
            let raw = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            serde_json::from_str(&raw).map_err(|e| Error::json(&path, e))
        })
        .collect()
}
