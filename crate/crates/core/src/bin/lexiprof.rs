fn main() {
    std::process::exit(lexiprof::cli::main_with_args(std::env::args_os()));
}
