use riclie::cli;

fn main() {
    std::process::exit(cli::run());
}
