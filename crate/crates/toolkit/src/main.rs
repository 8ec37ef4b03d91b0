fn main() {
    std::process::exit(vabe_toolkit::cli::run(std::env::args_os()));
}
