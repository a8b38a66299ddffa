//! Runs one of the bundled JSON configurations in-process, the same way the
//! `delayed-claims run` command does.
//!
//! `cargo run --example run_config -- examples/configs/approx.json /tmp/out`

use std::path::PathBuf;

use delayed_claims::report::{execute_with_threads, RunConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/approx.json").to_string()
    }));
    let result = RunConfig::from_file(&path).and_then(|mut config| {
        config.output = args.next().map_or_else(|| std::env::temp_dir().join("delayed-claims-example"), PathBuf::from);
        execute_with_threads(&config, None)
    });
    match result {
        Ok(summary) => {
            for file in &summary.files {
                println!("wrote {}", file.display());
            }
        }
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}
