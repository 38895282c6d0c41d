fn main() {
    std::process::exit(dc_optlab::cli::run());
}
