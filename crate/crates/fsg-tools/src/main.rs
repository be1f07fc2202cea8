use fsg_tools::cli;

fn main() {
    let outcome = cli::run(std::env::args_os());
    std::process::exit(outcome.exit_code);
}
