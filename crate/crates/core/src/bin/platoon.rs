fn main() {
    std::process::exit(platoon_fdi::cli::run(std::env::args_os()));
}
