use clap::Parser;
use convex_mixing::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
