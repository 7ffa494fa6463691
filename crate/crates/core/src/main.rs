use clap::Parser;

use rfskit::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("rfskit: error[{}]: {e}", e.kind());
        std::process::exit(e.exit_code());
    }
}
