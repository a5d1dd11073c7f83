fn main() {
    std::process::exit(optimist_cli::cli::cli_main(std::env::args_os()));
}
