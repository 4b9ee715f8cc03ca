use std::process::exit;

fn main() {
    exit(tabterm::cli::run_cli(std::env::args_os()));
}
