use clap::Parser;
use thresholdnet::cli::{run, Cli};

fn main() {
    // clap exits with 2 on bad flags and 0 on --help/--version.
    let cli = Cli::parse();
    std::process::exit(run(cli));
}
