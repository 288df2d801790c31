use clap::Parser;
use schrolog::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}
