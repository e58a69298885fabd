use clap::Parser;

fn main() {
    std::process::exit(cspin::cli::main_with_args(cspin::cli::Args::parse()));
}
