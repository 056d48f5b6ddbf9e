fn main() {
    std::process::exit(dppsim_cli::run(std::env::args().collect()));
}
