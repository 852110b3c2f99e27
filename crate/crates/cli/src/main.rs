fn main() {
    std::process::exit(diavgeia_cli::run(std::env::args_os()));
}
