use std::path::{Path, PathBuf};

use vsi_core::harness::load_corpus;
use vsi_core::subtitle::{load_srt, SrtOptions};
use vsi_core::targets::SemanticTargets;
use vsi_core::videostream::ScriptedDetector;

use crate::args::ValidateArgs;
use crate::failure::Failure;
use crate::settings::Settings;

fn merged(cli: Vec<PathBuf>, file: &[PathBuf]) -> Vec<PathBuf> {
    if cli.is_empty() {
        file.to_vec()
    } else {
        cli
    }
}

pub fn run(args: ValidateArgs) -> Result<(), Failure> {
    let settings = Settings::resolve(None)?;
    let file = &settings.validate;
    let lenient = args.lenient_srt || file.lenient_srt.unwrap_or(false);

    type Check = fn(&Path, bool) -> Result<String, String>;
    let groups: [(Vec<PathBuf>, Check); 5] = [
        (merged(args.srt, &file.srt), |p, lenient| {
            load_srt(p, SrtOptions { lenient })
                .map(|t| format!("{} segment(s)", t.len()))
                .map_err(|e| e.to_string())
        }),
        (merged(args.targets, &file.targets), |p, _| {
            let raw = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
            SemanticTargets::from_json_str(&raw)
                .map(|t| format!("{} target(s), {} cue(s)", t.targets().len(), t.cues().len()))
                .map_err(|e| e.to_string())
        }),
        (merged(args.fixtures, &file.fixtures), |p, _| {
            ScriptedDetector::from_file(p)
                .map(|d| format!("{} scripted frame(s)", d.script().len()))
                .map_err(|e| e.to_string())
        }),
        (merged(args.configs, &file.configs), |p, _| {
            let s = Settings::load(p).map_err(|f| f.message)?;
            s.config.validate().map_err(|e| e.to_string())?;
            Ok("valid settings".into())
        }),
        (merged(args.corpora, &file.corpora), |p, _| {
            let corpus = load_corpus(p).map_err(|e| e.to_string())?;
            if corpus.is_empty() {
                return Err("corpus is empty".into());
            }
            Ok(format!("{} case(s)", corpus.len()))
        }),
    ];

    let mut checked = 0;
    let mut bad = 0;
    for (paths, check) in groups {
        for path in paths {
            checked += 1;
            match check(&path, lenient) {
                Ok(summary) => println!("ok    {}: {summary}", path.display()),
                Err(e) => {
                    bad += 1;
                    println!("error {}: {e}", path.display());
                }
            }
        }
    }
    if checked == 0 {
        return Err(Failure::usage(
            "nothing to validate (pass --srt, --targets, --fixture, --config or --corpus)",
        ));
    }
    if bad > 0 {
        return Err(Failure::usage(format!(
            "{bad} of {checked} file(s) failed validation"
        )));
    }
    Ok(())
}
