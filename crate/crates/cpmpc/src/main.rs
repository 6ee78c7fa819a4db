fn main() {
    std::process::exit(cpmpc::cli::run(std::env::args_os()));
}
