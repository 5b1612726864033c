//! Newline-delimited JSON protocol for out-of-process backends.
//!
//! Requests:
//!
//! ```text
//! {"op":"embed","texts":["...", ...]}
//! {"op":"detect","frames":[0, 12, ...],"vocabulary":["dog", ...]}
//! ```
//!
//! Responses are `{"embeddings":[[...], ...]}`, `{"detections":[{"frame":i,
//! "name":"...","confidence":x}, ...]}` or `{"error":"..."}`. One JSON
//! document per line, either over a child's standard streams or as an HTTP
//! POST body.
//!
//! Backend specs: `stub:PATH` (scripted detector fixture; for the encoder,
//! `stub` or `stub:DIM` selects the hashed bag-of-words encoder),
//! `proc:CMDLINE` (child process) and `http:URL`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::textstream::{Embedding, HashedBagOfWords, TextEncoder};
use crate::videostream::{Detection, Detector, ScriptedDetector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Embed {
        texts: Vec<String>,
    },
    Detect {
        frames: Vec<usize>,
        vocabulary: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Error { error: String },
    Embeddings { embeddings: Vec<Vec<f64>> },
    Detections { detections: Vec<Detection> },
}

impl Response {
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("responses always serialize");
        line.push('\n');
        line
    }
}

/// Parse one response line; `{"error": ...}` becomes [`BackendError::Remote`].
pub fn parse_response(line: &str) -> Result<Response, BackendError> {
    let resp: Response = serde_json::from_str(line.trim_end())
        .map_err(|e| BackendError::Protocol(format!("{e}: {}", truncate(line, 120))))?;
    match resp {
        Response::Error { error } => Err(BackendError::Remote(error)),
        ok => Ok(ok),
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Something that can carry one request and return the raw response line.
pub trait Transport {
    fn exchange(&mut self, request: &str) -> Result<String, BackendError>;
}

/// Child process speaking the protocol on stdin/stdout.
pub struct ProcessTransport {
    command: String,
    child: Child,
    stdin: BufWriter<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

impl ProcessTransport {
    /// Spawns `command` through `sh -c`.
    pub fn spawn(command: &str) -> Result<Self, BackendError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| BackendError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = BufWriter::new(child.stdin.take().expect("stdin is piped"));
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            command: command.to_string(),
            child,
            stdin,
            stdout,
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }
}

impl Transport for ProcessTransport {
    fn exchange(&mut self, request: &str) -> Result<String, BackendError> {
        let write = self
            .stdin
            .write_all(request.as_bytes())
            .and_then(|_| self.stdin.write_all(b"\n"))
            .and_then(|_| self.stdin.flush());
        match write {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {
                return Err(BackendError::Closed)
            }
            other => other?,
        }
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(BackendError::Closed);
        }
        Ok(line)
    }
}

impl Drop for ProcessTransport {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Protocol over HTTP: each request is POSTed to `url`, the body of the
/// reply is the response document.
pub struct HttpTransport {
    url: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            agent: ureq::Agent::new_with_defaults(),
        }
    }
}

impl Transport for HttpTransport {
    fn exchange(&mut self, request: &str) -> Result<String, BackendError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .content_type("application/json")
            .send(request)
            .map_err(|e| BackendError::Http(format!("{}: {e}", self.url)))?;
        resp.body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Http(format!("{}: {e}", self.url)))
    }
}

/// Detector and encoder client over any [`Transport`].
pub struct RemoteBackend<T> {
    transport: T,
}

impl<T: Transport> RemoteBackend<T> {
    pub fn new(transport: T) -> Self {
        Self { transport }
    }

    fn call(&mut self, request: &Request) -> Result<Response, BackendError> {
        let body = serde_json::to_string(request).expect("requests always serialize");
        parse_response(&self.transport.exchange(&body)?)
    }
}

impl<T: Transport> Detector for RemoteBackend<T> {
    fn detect(
        &mut self,
        frames: &[usize],
        vocabulary: &[String],
    ) -> Result<Vec<Detection>, BackendError> {
        match self.call(&Request::Detect {
            frames: frames.to_vec(),
            vocabulary: vocabulary.to_vec(),
        })? {
            Response::Detections { detections } => Ok(detections),
            other => Err(BackendError::Protocol(format!(
                "expected detections, got {other:?}"
            ))),
        }
    }
}

impl<T: Transport> TextEncoder for RemoteBackend<T> {
    fn embed(&mut self, texts: &[String]) -> Result<Vec<Embedding>, BackendError> {
        match self.call(&Request::Embed {
            texts: texts.to_vec(),
        })? {
            Response::Embeddings { embeddings } => {
                Ok(embeddings.into_iter().map(Embedding).collect())
            }
            other => Err(BackendError::Protocol(format!(
                "expected embeddings, got {other:?}"
            ))),
        }
    }
}

/// Parsed backend spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Stub(String),
    Proc(String),
    Http(String),
}

impl std::str::FromStr for BackendSpec {
    type Err = BackendError;

    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        if spec == "stub" {
            return Ok(BackendSpec::Stub(String::new()));
        }
        let (kind, rest) = spec
            .split_once(':')
            .ok_or_else(|| BackendError::Spec(spec.to_string()))?;
        match kind {
            "stub" => Ok(BackendSpec::Stub(rest.to_string())),
            "proc" if !rest.trim().is_empty() => Ok(BackendSpec::Proc(rest.to_string())),
            // `http://host/...` is itself a valid `http:URL` spec
            "http" if rest.starts_with("//") => Ok(BackendSpec::Http(spec.to_string())),
            "http" if !rest.is_empty() => Ok(BackendSpec::Http(rest.to_string())),
            _ => Err(BackendError::Spec(spec.to_string())),
        }
    }
}

pub fn open_detector(spec: &BackendSpec) -> Result<Box<dyn Detector>, BackendError> {
    Ok(match spec {
        BackendSpec::Stub(path) if path.is_empty() => {
            return Err(BackendError::Spec("stub".into()))
        }
        BackendSpec::Stub(path) => Box::new(ScriptedDetector::from_file(path)?),
        BackendSpec::Proc(cmd) => Box::new(RemoteBackend::new(ProcessTransport::spawn(cmd)?)),
        BackendSpec::Http(url) => Box::new(RemoteBackend::new(HttpTransport::new(url.clone()))),
    })
}

pub fn open_encoder(spec: &BackendSpec) -> Result<Box<dyn TextEncoder>, BackendError> {
    Ok(match spec {
        BackendSpec::Stub(arg) if arg.is_empty() => Box::new(HashedBagOfWords::default()),
        BackendSpec::Stub(arg) => {
            let dim: usize = arg.parse().ok().filter(|&d| d > 0).ok_or_else(|| {
                BackendError::Spec(format!("stub:{arg} (expected stub or stub:DIM)"))
            })?;
            Box::new(HashedBagOfWords::new(dim))
        }
        BackendSpec::Proc(cmd) => Box::new(RemoteBackend::new(ProcessTransport::spawn(cmd)?)),
        BackendSpec::Http(url) => Box::new(RemoteBackend::new(HttpTransport::new(url.clone()))),
    })
}

/// Answer protocol requests line by line until `input` closes. Malformed
/// lines get an error response; the loop keeps going.
pub fn serve_lines<R, W, F>(input: R, mut output: W, mut handle: F) -> std::io::Result<()>
where
    R: BufRead,
    W: Write,
    F: FnMut(Request) -> Response,
{
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<Request>(&line) {
            Ok(req) => handle(req),
            Err(e) => Response::Error {
                error: format!("malformed request: {e}"),
            },
        };
        output.write_all(resp.to_line().as_bytes())?;
        output.flush()?;
    }
    Ok(())
}

/// Request handler backed by the in-process stubs.
pub struct StubHandler {
    pub encoder: HashedBagOfWords,
    pub detector: ScriptedDetector,
}

impl StubHandler {
    pub fn handle(&mut self, req: Request) -> Response {
        match req {
            Request::Embed { texts } => Response::Embeddings {
                embeddings: texts.iter().map(|t| self.encoder.encode(t).0).collect(),
            },
            Request::Detect { frames, vocabulary } => {
                match self.detector.detect(&frames, &vocabulary) {
                    Ok(detections) => Response::Detections { detections },
                    Err(e) => Response::Error {
                        error: e.to_string(),
                    },
                }
            }
        }
    }
}
