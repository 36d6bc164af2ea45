fn main() {
    std::process::exit(qipkit::cli::dispatch(std::env::args_os()));
}
