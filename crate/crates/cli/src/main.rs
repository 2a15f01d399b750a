mod args;
mod commands;
mod config;
mod error;
mod io;

use clap::Parser;

fn main() {
    if let Ok(threads) = std::env::var("SPDC_HERALD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            // a second initialization attempt is harmless
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = args::Cli::parse();
    if let Err(err) = commands::run(cli) {
        let payload = serde_json::json!({
            "error": {
                "kind": err.kind(),
                "message": err.to_string(),
            }
        });
        eprintln!("{payload}");
        std::process::exit(err.exit_code());
    }
}
