use clap::Parser;
use weylgas::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
