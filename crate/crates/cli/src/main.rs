fn main() {
    std::process::exit(tessellate_cli::run(std::env::args_os()));
}
