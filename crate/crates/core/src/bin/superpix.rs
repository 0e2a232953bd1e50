fn main() {
    std::process::exit(superpix::cli::run(std::env::args_os()));
}
