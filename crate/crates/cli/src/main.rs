fn main() {
    std::process::exit(mettlext_cli::run(std::env::args_os()));
}
