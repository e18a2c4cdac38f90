fn main() {
    std::process::exit(rangenoise::cli::run(std::env::args_os()));
}
