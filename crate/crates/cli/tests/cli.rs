use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

const VSI: &str = env!("CARGO_BIN_EXE_vsi");
const BRIDGE: &str = env!("CARGO_BIN_EXE_vsi-stub-bridge");

fn vsi(args: &[&str]) -> Command {
    let mut cmd = Command::new(VSI);
    cmd.args(args).env_remove("VSI_CONFIG");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("vsi runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A 3000-frame video at 30 fps. The umbrella is visible on frames
/// 1200..=1230 and mentioned in a subtitle at 40-41 s.
struct Inputs {
    dir: TempDir,
}

impl Inputs {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("talk.srt"),
            "1\n00:00:05,000 --> 00:00:07,000\ngood morning everyone\n\n\
             2\n00:00:40,000 --> 00:00:41,000\nwhere did I leave the red umbrella\n\n\
             3\n00:01:20,000 --> 00:01:22,000\nsee you tomorrow\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("targets.json"),
            r#"{"targets": ["red umbrella"], "cues": ["coat rack"]}"#,
        )
        .unwrap();
        let mut fixture = serde_json::Map::new();
        for f in 1200..=1230 {
            fixture.insert(
                f.to_string(),
                serde_json::json!([{"name": "red umbrella", "confidence": 0.9}]),
            );
        }
        fixture.insert(
            "100".into(),
            serde_json::json!([{"name": "coat rack", "confidence": 0.7}]),
        );
        std::fs::write(
            dir.path().join("fixture.json"),
            Value::Object(fixture).to_string(),
        )
        .unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn search_args(&self, detector: &str) -> Vec<String> {
        [
            "search",
            "--frames",
            "3000",
            "--fps",
            "30",
            "--subtitles",
            &self.p("talk.srt"),
            "--query",
            "where is the red umbrella",
            "--targets",
            &self.p("targets.json"),
            "--detector",
            detector,
            "--encoder",
            "stub",
            "--frame-budget",
            "600",
            "--max-grid-side",
            "4",
            "--seed",
            "3",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn stub_detector(&self) -> String {
        format!("stub:{}", self.p("fixture.json"))
    }
}

fn search_with(inputs: &Inputs, detector: &str, extra: &[&str]) -> (Output, Option<Value>) {
    let out_path = inputs.path(&format!("result-{}.json", extra.len()));
    let _ = std::fs::remove_file(&out_path);
    let mut args = inputs.search_args(detector);
    if extra.contains(&"--encoder") {
        let pos = args.iter().position(|a| a == "--encoder").unwrap();
        args.drain(pos..pos + 2);
    }
    args.push("--output".into());
    args.push(out_path.display().to_string());
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&mut vsi(&refs));
    let result = std::fs::read_to_string(&out_path)
        .ok()
        .map(|s| serde_json::from_str(&s).unwrap());
    (out, result)
}

fn keyframes(result: &Value) -> Vec<u64> {
    result["keyframes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|k| k["frame"].as_u64().unwrap())
        .collect()
}

#[test]
fn search_with_stub_backends() {
    let inputs = Inputs::new();
    let (out, result) = search_with(&inputs, &inputs.stub_detector(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let result = result.unwrap();
    assert_eq!(result["keyframes"].as_array().unwrap().len(), 4);
    assert_eq!(result["termination"], "all_targets_found");
    assert!(result["frames_examined"].as_u64().unwrap() <= 600);
    assert_eq!(result["config"]["frame_budget"], 600);
    assert_eq!(result["config"]["max_grid_side"], 4);
    let top = result["keyframes"][0]["frame"].as_u64().unwrap();
    // subtitle at 40-41 s, extended by 2 s either side
    assert!((38 * 30..=43 * 30).contains(&top), "top keyframe {top}");
    let k0 = &result["keyframes"][0];
    assert!((k0["time_s"].as_f64().unwrap() - top as f64 / 30.0).abs() < 1e-12);
}

#[test]
fn missing_query_names_the_flag() {
    let inputs = Inputs::new();
    let args: Vec<String> = inputs.search_args(&inputs.stub_detector());
    let pos = args.iter().position(|a| a == "--query").unwrap();
    let mut args = args;
    args.drain(pos..pos + 2);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&mut vsi(&refs));
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("--query"), "{err}");
    assert_eq!(err.trim().lines().count(), 1, "{err}");
}

#[test]
fn dead_http_endpoint_exits_3() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let inputs = Inputs::new();
    let (out, result) = search_with(&inputs, &format!("http://127.0.0.1:{port}/"), &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(result.is_none());
}

#[test]
fn dead_process_exits_3() {
    let inputs = Inputs::new();
    let (out, _) = search_with(&inputs, "proc:exit 0", &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn bad_specs_and_fixtures_exit_2() {
    let inputs = Inputs::new();
    for det in ["stub:/no/such/fixture.json", "ftp:somewhere", "stub"] {
        let (out, _) = search_with(&inputs, det, &[]);
        assert_eq!(out.status.code(), Some(2), "{det}: {}", stderr(&out));
    }
}

#[test]
fn malformed_subtitles_exit_2_with_line() {
    let inputs = Inputs::new();
    std::fs::write(
        inputs.path("talk.srt"),
        "1\n00:00:05,000 --> 00:00:02,000\nbad\n",
    )
    .unwrap();
    let (out, _) = search_with(&inputs, &inputs.stub_detector(), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn invalid_parameter_exits_2() {
    let inputs = Inputs::new();
    let (out, _) = search_with(&inputs, &inputs.stub_detector(), &["--text-weight", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("text_weight"), "{}", stderr(&out));
}

#[test]
fn proc_bridge_matches_in_process_stub() {
    let inputs = Inputs::new();
    let (_, local) = search_with(&inputs, &inputs.stub_detector(), &[]);
    let proc_spec = format!("proc:{BRIDGE} --fixture {}", inputs.p("fixture.json"));
    let (out, remote) = search_with(
        &inputs,
        &proc_spec,
        &["--encoder", &format!("proc:{BRIDGE}")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (local, remote) = (local.unwrap(), remote.unwrap());
    assert_eq!(keyframes(&local), keyframes(&remote));
    assert_eq!(local["iterations"], remote["iterations"]);
}

struct Bridge(Child);

impl Drop for Bridge {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http_bridge(fixture: &Path) -> (Bridge, String) {
    let mut child = Command::new(BRIDGE)
        .args(["--listen", "127.0.0.1:0", "--fixture"])
        .arg(fixture)
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    (Bridge(child), format!("http://{}/", line.trim()))
}

#[test]
fn http_bridge_end_to_end() {
    let inputs = Inputs::new();
    let (_bridge, url) = http_bridge(&inputs.path("fixture.json"));
    let (_, local) = search_with(&inputs, &inputs.stub_detector(), &[]);
    let (out, remote) = search_with(&inputs, &url, &["--encoder", &url]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(keyframes(&local.unwrap()), keyframes(&remote.unwrap()));
}

#[test]
fn trace_has_one_snapshot_per_iteration() {
    let inputs = Inputs::new();
    let trace = inputs.p("trace.jsonl");
    let (out, result) = search_with(&inputs, &inputs.stub_detector(), &["--trace", &trace]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let result = result.unwrap();
    let lines: Vec<Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len() as u64, result["iterations"].as_u64().unwrap());
    for (i, snap) in lines.iter().enumerate() {
        assert_eq!(snap["iteration"].as_u64().unwrap(), i as u64 + 1);
        let dist = snap["distribution"].as_array().unwrap();
        assert_eq!(dist.len(), 3000);
        let total: f64 = dist.iter().map(|p| p.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(!snap["visited"].as_array().unwrap().is_empty());
    }
}

#[test]
fn settings_file_supplies_flags_and_cli_wins() {
    let inputs = Inputs::new();
    let settings = format!(
        "top_k = 2\nframe_budget = 600\nmax_grid_side = 4\nrng_seed = 3\n\n[search]\nframes = 3000\nfps = 30.0\n\
         subtitles = {:?}\nquery = \"where is the red umbrella\"\ntargets = {:?}\ndetector = {:?}\nencoder = \"stub\"\n",
        inputs.p("talk.srt"),
        inputs.p("targets.json"),
        inputs.stub_detector()
    );
    std::fs::write(inputs.path("vsi.toml"), settings).unwrap();
    let out_path = inputs.p("from-file.json");

    let out =
        run(vsi(&["search", "--output", &out_path]).env("VSI_CONFIG", inputs.path("vsi.toml")));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(result["keyframes"].as_array().unwrap().len(), 2);

    let out = run(&mut vsi(&[
        "search",
        "--config",
        &inputs.p("vsi.toml"),
        "--top-k",
        "3",
        "--output",
        &out_path,
    ]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let result: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(result["keyframes"].as_array().unwrap().len(), 3);
    assert_eq!(result["config"]["top_k"], 3);
}

#[test]
fn bench_sweep_writes_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("report");
    let out = run(&mut vsi(&[
        "bench",
        "--generate",
        "7,12,n_frames=2000",
        "--text-weight",
        "0.0",
        "--text-weight",
        "1.0",
        "--max-grid-side",
        "4",
        "--frame-budget",
        "500",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["text_weight"], 0.0);
    assert_eq!(rows[1]["text_weight"], 1.0);
    assert_eq!(report["cases"], 12);
    assert!(report["hit_rule"].as_str().unwrap().contains("any"));
    let table = std::fs::read_to_string(out_dir.join("report.txt")).unwrap();
    assert!(
        table.contains("text_weight=0") && table.contains("text_weight=1"),
        "{table}"
    );
}

#[test]
fn bench_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("r");
    let manifest = dir.path().join("manifest.json");
    std::fs::write(&manifest, r#"{"cases": []}"#).unwrap();
    let out = run(&mut vsi(&[
        "bench",
        "--corpus",
        manifest.to_str().unwrap(),
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = run(&mut vsi(&[
        "bench",
        "--generate",
        "7,2",
        "--text-weight",
        "1.5",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = run(&mut vsi(&[
        "bench",
        "--generate",
        "7,2,bogus=1",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = run(&mut vsi(&[
        "bench",
        "--output-dir",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn bench_saved_corpus_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    let gen_out = dir.path().join("a");
    let load_out = dir.path().join("b");
    let common = [
        "--text-weight",
        "0.5",
        "--max-grid-side",
        "4",
        "--frame-budget",
        "300",
    ];
    let mut args = vec![
        "bench",
        "--generate",
        "3,4,n_frames=1000",
        "--save-corpus",
        corpus_dir.to_str().unwrap(),
        "--output-dir",
        gen_out.to_str().unwrap(),
    ];
    args.extend(common);
    assert_eq!(run(&mut vsi(&args)).status.code(), Some(0));
    let manifest = corpus_dir.join("manifest.json");
    let mut args = vec![
        "bench",
        "--corpus",
        manifest.to_str().unwrap(),
        "--output-dir",
        load_out.to_str().unwrap(),
    ];
    args.extend(common);
    assert_eq!(run(&mut vsi(&args)).status.code(), Some(0));
    assert_eq!(
        std::fs::read(gen_out.join("report.json")).unwrap(),
        std::fs::read(load_out.join("report.json")).unwrap()
    );
}

#[test]
fn validate_reports_each_file() {
    let inputs = Inputs::new();
    std::fs::write(
        inputs.path("bad.srt"),
        "1\n00:00:01,000 -> 00:00:02,000\nx\n",
    )
    .unwrap();
    let out = run(&mut vsi(&[
        "validate",
        "--srt",
        &inputs.p("talk.srt"),
        "--targets",
        &inputs.p("targets.json"),
        "--fixture",
        &inputs.p("fixture.json"),
    ]));
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("3 segment(s)"), "{stdout}");

    let out = run(&mut vsi(&["validate", "--srt", &inputs.p("bad.srt")]));
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("line 2"), "{stdout}");

    let out = run(&mut vsi(&["validate"]));
    assert_eq!(out.status.code(), Some(2));
}
