fn main() {
    std::process::exit(pairclust::run(std::env::args_os()));
}
