use clap::Parser;
use symcocycle::cli::{run, RunConfig};

fn main() {
    std::process::exit(run(&RunConfig::parse()));
}
