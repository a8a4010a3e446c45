fn main() {
    std::process::exit(dcpoly::cli::parse_and_dispatch(std::env::args_os()));
}
