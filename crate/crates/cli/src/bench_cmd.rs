use std::path::{Path, PathBuf};

use vsi_core::harness::{
    generate_corpus, load_corpus, run_benchmark, save_corpus, GeneratorParams, LabeledConfig,
    SyntheticCase, DEFAULT_HIT_WINDOW,
};
use vsi_core::SearchConfig;

use crate::args::BenchArgs;
use crate::failure::Failure;
use crate::settings::Settings;

/// Parse `SEED,COUNT[,KEY=VALUE...]`; keys are generator parameter names.
pub fn parse_generate(raw: &str) -> Result<(u64, usize, GeneratorParams), Failure> {
    let bad = |msg: String| Failure::usage(format!("--generate {raw:?}: {msg}"));
    let mut parts = raw.split(',').map(str::trim);
    let seed = parts
        .next()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| bad("missing seed".into()))?
        .parse::<u64>()
        .map_err(|e| bad(format!("seed: {e}")))?;
    let count = parts
        .next()
        .ok_or_else(|| bad("missing count".into()))?
        .parse::<usize>()
        .map_err(|e| bad(format!("count: {e}")))?;
    let mut params = serde_json::Map::new();
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| bad(format!("expected KEY=VALUE, got {kv:?}")))?;
        let value: serde_json::Value =
            serde_json::from_str(v.trim()).map_err(|_| bad(format!("{k}: not a number: {v:?}")))?;
        params.insert(k.trim().to_string(), value);
    }
    let params: GeneratorParams = serde_json::from_value(serde_json::Value::Object(params))
        .map_err(|e| bad(e.to_string()))?;
    Ok((seed, count, params))
}

fn label_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn build_rows(args: &BenchArgs, settings: &Settings) -> Result<Vec<LabeledConfig>, Failure> {
    let with_overrides = |mut cfg: SearchConfig| {
        args.overrides.apply(&mut cfg);
        cfg
    };
    let config_paths: &[PathBuf] = if args.configs.is_empty() {
        &settings.bench.configs
    } else {
        &args.configs
    };
    let weights: &[f64] = if args.text_weights.is_empty() {
        &settings.bench.text_weights
    } else {
        &args.text_weights
    };

    let mut rows = Vec::new();
    for path in config_paths {
        let cfg = with_overrides(Settings::load(path)?.config);
        rows.push(LabeledConfig {
            label: label_for(path),
            config: cfg,
        });
    }
    for &tw in weights {
        let mut cfg = with_overrides(settings.config.clone());
        cfg.text_weight = tw;
        rows.push(LabeledConfig {
            label: format!("text_weight={tw}"),
            config: cfg,
        });
    }
    if rows.is_empty() {
        rows.push(LabeledConfig {
            label: "base".into(),
            config: with_overrides(settings.config.clone()),
        });
    }
    for row in &rows {
        row.config
            .validate()
            .map_err(|e| Failure::usage(format!("{}: {e}", row.label)))?;
    }
    Ok(rows)
}

pub fn run(args: BenchArgs) -> Result<(), Failure> {
    let settings = Settings::resolve(None)?;
    let rows = build_rows(&args, &settings)?;
    let file = &settings.bench;

    let output_dir = args
        .output_dir
        .clone()
        .or_else(|| file.output_dir.clone())
        .ok_or_else(|| Failure::missing("output-dir"))?;
    let jobs = args.jobs.or(file.jobs).unwrap_or(0);
    let hit_window = args
        .hit_window
        .or(file.hit_window)
        .unwrap_or(DEFAULT_HIT_WINDOW);

    let corpus: Vec<SyntheticCase> = match (&args.corpus, &args.generate) {
        (Some(path), _) => load_corpus(path)?,
        (None, Some(spec)) => generate(
            spec,
            args.save_corpus.as_deref().or(file.save_corpus.as_deref()),
        )?,
        (None, None) => match (&file.corpus, &file.generate) {
            (Some(path), _) => load_corpus(path)?,
            (None, Some(spec)) => generate(
                spec,
                args.save_corpus.as_deref().or(file.save_corpus.as_deref()),
            )?,
            (None, None) => {
                return Err(Failure::usage(
                    "missing required flag --corpus or --generate",
                ))
            }
        },
    };
    if corpus.is_empty() {
        return Err(Failure::usage("corpus is empty"));
    }

    let report = run_benchmark(&corpus, &rows, hit_window, jobs)?;

    std::fs::create_dir_all(&output_dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", output_dir.display())))?;
    for (name, body) in [
        ("report.json", report.to_json()),
        ("report.txt", report.to_table()),
    ] {
        let path = output_dir.join(name);
        std::fs::write(&path, body)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    print!("{}", report.to_table());

    for row in &report.rows {
        for f in &row.failures {
            log::warn!("{}: {f}", row.label);
        }
    }
    if report.rows.iter().all(|r| r.failed == r.cases) {
        let first = report.rows.iter().flat_map(|r| r.failures.first()).next();
        return Err(Failure::backend(format!(
            "every case failed ({})",
            first.map(String::as_str).unwrap_or("no detail")
        )));
    }
    Ok(())
}

fn generate(spec: &str, save_to: Option<&Path>) -> Result<Vec<SyntheticCase>, Failure> {
    let (seed, count, params) = parse_generate(spec)?;
    let corpus = generate_corpus(seed, count, &params)?;
    if let Some(dir) = save_to {
        save_corpus(dir, &corpus)?;
    }
    Ok(corpus)
}
