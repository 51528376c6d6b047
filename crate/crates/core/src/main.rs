//! Binary entry point; see `sanintent --help`.

use clap::Parser;
use sanintent::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{}: {e}", e.tag());
        std::process::exit(e.exit_code());
    }
}
