fn main() {
    std::process::exit(mtlsim_cli::run(std::env::args_os()));
}
