fn main() {
    std::process::exit(mvlle_cli::dispatch(std::env::args_os()));
}
