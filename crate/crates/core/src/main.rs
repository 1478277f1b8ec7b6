use clap::Parser;
use thin_obstacle::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
