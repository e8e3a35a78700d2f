fn main() {
    std::process::exit(pleader::cli::run(std::env::args_os()));
}
