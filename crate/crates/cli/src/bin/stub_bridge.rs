//! Serves the backend protocol from the built-in stubs: the hashed
//! bag-of-words encoder and a scripted detector fixture. Reads requests on
//! stdin by default, or answers HTTP POSTs with `--listen ADDR`.

use std::io::BufWriter;
use std::path::PathBuf;

use clap::Parser;
use vsi_core::protocol::{serve_lines, Request, Response, StubHandler};
use vsi_core::textstream::HashedBagOfWords;
use vsi_core::videostream::ScriptedDetector;

#[derive(Parser)]
#[command(name = "vsi-stub-bridge", version)]
struct Args {
    /// Scripted detector fixture; without it every detect call returns nothing.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Embedding dimension.
    #[arg(long, default_value_t = HashedBagOfWords::DEFAULT_DIM)]
    dim: usize,
    /// Serve HTTP on this address instead of stdin/stdout.
    #[arg(long)]
    listen: Option<String>,
}

fn main() {
    let args = Args::parse();
    let detector = match &args.fixture {
        Some(p) => match ScriptedDetector::from_file(p) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("error: {e}");
                std::process::exit(2);
            }
        },
        None => ScriptedDetector::default(),
    };
    if args.dim == 0 {
        eprintln!("error: --dim must be positive");
        std::process::exit(2);
    }
    let mut handler = StubHandler {
        encoder: HashedBagOfWords::new(args.dim),
        detector,
    };

    let result = match args.listen {
        None => {
            let stdin = std::io::stdin().lock();
            let stdout = BufWriter::new(std::io::stdout().lock());
            serve_lines(stdin, stdout, |req| handler.handle(req))
        }
        Some(addr) => serve_http(&addr, &mut handler),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(3);
    }
}

fn serve_http(addr: &str, handler: &mut StubHandler) -> std::io::Result<()> {
    let server = tiny_http::Server::http(addr).map_err(std::io::Error::other)?;
    // Report the bound address so callers can pass port 0.
    println!("{}", server.server_addr());
    for mut request in server.incoming_requests() {
        let mut body = String::new();
        let resp = match request.as_reader().read_to_string(&mut body) {
            Err(e) => Response::Error {
                error: format!("unreadable request: {e}"),
            },
            Ok(_) => match serde_json::from_str::<Request>(&body) {
                Ok(req) => handler.handle(req),
                Err(e) => Response::Error {
                    error: format!("malformed request: {e}"),
                },
            },
        };
        let header = tiny_http::Header::from_bytes("Content-Type", "application/json")
            .expect("static header");
        let _ =
            request.respond(tiny_http::Response::from_string(resp.to_line()).with_header(header));
    }
    Ok(())
}
