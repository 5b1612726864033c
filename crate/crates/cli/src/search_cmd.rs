use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use vsi_core::protocol::{open_detector, open_encoder, BackendSpec};
use vsi_core::subtitle::{load_srt, SrtOptions};
use vsi_core::videostream::StaticPlanner;
use vsi_core::{
    search_with_observer, Backends, Keyframe, ScoreState, SearchConfig, SemanticTargets,
    Termination, VideoTimeline,
};

use crate::args::SearchArgs;
use crate::failure::Failure;
use crate::settings::Settings;

#[derive(Serialize)]
struct SearchResult<'a> {
    keyframes: &'a [Keyframe],
    iterations: usize,
    frames_examined: usize,
    termination: Termination,
    targets: &'a SemanticTargets,
    warnings: &'a [String],
    config: &'a SearchConfig,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    iteration: usize,
    #[serde(flatten)]
    state: &'a ScoreState,
}

fn required<T>(cli: Option<T>, file: Option<T>, flag: &str) -> Result<T, Failure> {
    cli.or(file).ok_or_else(|| Failure::missing(flag))
}

fn spec(raw: &str, flag: &str) -> Result<BackendSpec, Failure> {
    raw.parse()
        .map_err(|e| Failure::usage(format!("--{flag}: {e}")))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn run(args: SearchArgs) -> Result<(), Failure> {
    let settings = Settings::resolve(args.config.as_deref())?;
    let file = settings.search;

    // Every flag is checked before any backend is started.
    let frames = required(args.frames, file.frames, "frames")?;
    let fps = required(args.fps, file.fps, "fps")?;
    let subtitles = required(args.subtitles, file.subtitles, "subtitles")?;
    let query = required(args.query, file.query, "query")?;
    let targets_path = required(args.targets, file.targets, "targets")?;
    let detector_spec = required(args.detector, file.detector, "detector")?;
    let encoder_spec = required(args.encoder, file.encoder, "encoder")?;
    let output = args.output.or(file.output);
    let trace = args.trace.or(file.trace);
    let lenient = args.lenient_srt || file.lenient_srt.unwrap_or(false);

    let mut cfg = settings.config;
    if let Some(tw) = args.text_weight {
        cfg.text_weight = tw;
    }
    args.overrides.apply(&mut cfg);
    cfg.validate()?;

    let timeline = VideoTimeline::new(frames, fps)?;
    let track = load_srt(&subtitles, SrtOptions { lenient })?;
    let mut planner = StaticPlanner::from_file(&targets_path)?;
    let detector_spec = spec(&detector_spec, "detector")?;
    let encoder_spec = spec(&encoder_spec, "encoder")?;
    let mut trace_out = trace.as_deref().map(create).transpose()?;

    let mut detector = open_detector(&detector_spec)?;
    let mut encoder = open_encoder(&encoder_spec)?;

    let mut trace_err: Option<std::io::Error> = None;
    let outcome = search_with_observer(
        &timeline,
        &track,
        &query,
        &cfg,
        Backends {
            detector: detector.as_mut(),
            encoder: encoder.as_mut(),
            planner: &mut planner,
        },
        &mut |record, state| {
            if let (Some(w), None) = (trace_out.as_mut(), trace_err.as_ref()) {
                let line = TraceLine {
                    iteration: record.iteration,
                    state,
                };
                let res = serde_json::to_writer(&mut *w, &line)
                    .map_err(std::io::Error::from)
                    .and_then(|_| w.write_all(b"\n"));
                if let Err(e) = res {
                    trace_err = Some(e);
                }
            }
        },
    )?;
    if let Some(mut w) = trace_out {
        let res = match trace_err {
            Some(e) => Err(e),
            None => w.flush(),
        };
        res.map_err(|e| Failure::usage(format!("trace: {e}")))?;
    }

    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    let result = SearchResult {
        keyframes: &outcome.keyframes,
        iterations: outcome.iterations,
        frames_examined: outcome.frames_examined,
        termination: outcome.termination,
        targets: &outcome.targets,
        warnings: &outcome.warnings,
        config: &cfg,
    };
    let mut body = serde_json::to_string_pretty(&result).expect("result serializes");
    body.push('\n');
    match output {
        Some(path) => std::fs::write(&path, body)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        None => print!("{body}"),
    }
    eprintln!(
        "{} keyframe(s) after {} iteration(s), {} frame(s) examined ({})",
        outcome.keyframes.len(),
        outcome.iterations,
        outcome.frames_examined,
        outcome.termination
    );
    Ok(())
}
