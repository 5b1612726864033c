mod args;
mod bench_cmd;
mod failure;
mod search_cmd;
mod settings;
mod validate_cmd;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Search(a) => search_cmd::run(a),
        Command::Bench(a) => bench_cmd::run(a),
        Command::Validate(a) => validate_cmd::run(a),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}
