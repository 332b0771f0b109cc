fn main() {
    std::process::exit(spinlattice::cli::run(std::env::args_os()));
}
