fn main() {
    std::process::exit(nsd_bandit::cli::main(std::env::args_os()));
}
