fn main() {
    std::process::exit(lf_entropy::cli::cli_main(std::env::args_os()));
}
