fn main() {
    std::process::exit(ggcn::cli::run(std::env::args_os()));
}
